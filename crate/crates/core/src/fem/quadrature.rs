//! Symmetric quadrature on triangles and Gauss rules on segments.
//!
//! Triangle points are barycentric triples; weights are normalized to sum to
//! one, so an integral is `area * sum(w_q f(x_q))`.

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Six points, exact for polynomials of degree 4.
    pub fn degree4() -> Self {
        let mut rule = Self::empty();
        rule.push_orbit3(0.223_381_589_678_011_465_70, 0.445_948_490_915_964_886_32);
        rule.push_orbit3(0.109_951_743_655_321_867_64, 0.091_576_213_509_770_743_46);
        rule
    }

    /// Twelve points, exact for polynomials of degree 6.
    pub fn degree6() -> Self {
        let mut rule = Self::empty();
        rule.push_orbit3(0.116_786_275_726_379_366_03, 0.249_286_745_170_910_421_29);
        rule.push_orbit3(0.050_844_906_370_206_816_92, 0.063_089_014_491_502_228_34);
        rule.push_orbit6(
            0.082_851_075_618_373_575_19,
            0.053_145_049_844_816_947_35,
            0.310_352_451_033_784_405_42,
        );
        rule
    }

    fn empty() -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Points `(a, a, 1-2a)` and permutations.
    fn push_orbit3(&mut self, w: f64, a: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// All six permutations of `(a, b, 1-a-b)`.
    fn push_orbit6(&mut self, w: f64, a: f64, b: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }
}

/// Three-point Gauss rule on `[0, 1]`, exact to degree 5. Returns
/// `(position, weight)` pairs with weights summing to one.
pub fn gauss3_unit() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
