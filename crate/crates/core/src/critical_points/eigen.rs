//! Eigen-decomposition of 2×2 and 3×3 real matrices through the
//! characteristic polynomial, Newton polishing and cross-product null spaces.

use num_complex::Complex64;

use crate::phase_systems::Mat3;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Sorted by real part, then imaginary part.
    pub values: Vec<Complex64>,
    /// Unit eigenvectors, one per value (repeated values share a basis of
    /// the null space when it is large enough).
    pub vectors: Vec<Vec<Complex64>>,
    /// Some eigenvalue cluster has a null space smaller than its multiplicity.
    pub defective: bool,
}

impl Eigen {
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

/// Relative distance under which two eigenvalues count as repeated.
const CLUSTER_TOL: f64 = 1e-4;
/// Relative size under which a cross product or row counts as zero.
const RANK_TOL: f64 = 1e-7;

pub fn eig3(a: &Mat3, dim: usize) -> Eigen {
    assert!(dim == 2 || dim == 3, "eig3 handles 2x2 and 3x3 matrices");
    let mut values = if dim == 2 {
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        quadratic_roots(-tr, det).to_vec()
    } else {
        let (c2, c1, c0) = char_poly3(a);
        cubic_roots(c2, c1, c0).to_vec()
    };
    let coeffs: Vec<f64> = if dim == 2 {
        let tr = a[0][0] + a[1][1];
        vec![1.0, -tr, a[0][0] * a[1][1] - a[0][1] * a[1][0]]
    } else {
        let (c2, c1, c0) = char_poly3(a);
        vec![1.0, c2, c1, c0]
    };
    for v in values.iter_mut() {
        *v = polish(&coeffs, *v);
    }
    // Conjugate pairs stay exact conjugates after polishing.
    values.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    symmetrize_pairs(&mut values);

    let scale = matrix_scale(a, dim);
    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    let mut defective = false;
    let mut i = 0;
    while i < dim {
        let mut j = i + 1;
        while j < dim && (values[j] - values[i]).norm() <= CLUSTER_TOL * scale {
            j += 1;
        }
        let mult = j - i;
        let center = values[i..j].iter().sum::<Complex64>() / mult as f64;
        let basis = null_space(a, dim, center, scale);
        if basis.len() < mult {
            defective = true;
        }
        for k in 0..mult {
            let v = basis
                .get(k)
                .cloned()
                .or_else(|| basis.first().cloned())
                .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); dim]);
            vectors.push(v);
        }
        i = j;
    }
    Eigen {
        values,
        vectors,
        defective,
    }
}

fn matrix_scale(a: &Mat3, dim: usize) -> f64 {
    let mut s = 0.0f64;
    for row in a.iter().take(dim) {
        for v in row.iter().take(dim) {
            s = s.max(v.abs());
        }
    }
    s.max(1e-300)
}

/// Returns `(c2, c1, c0)` with `det(λI − A) = λ³ + c2 λ² + c1 λ + c0`.
fn char_poly3(a: &Mat3) -> (f64, f64, f64) {
    let tr = a[0][0] + a[1][1] + a[2][2];
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0]
        + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    (-tr, minors, -det)
}

/// Roots of `λ² + b λ + c`.
fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

/// Roots of `λ³ + a λ² + b λ + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let real_root = if disc > 0.0 {
        let s = disc.sqrt();
        (-0.5 * q + s).cbrt() + (-0.5 * q - s).cbrt() + shift
    } else if p == 0.0 {
        shift
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let roots = [
            r * phi.cos() + shift,
            r * (phi - 2.0 * std::f64::consts::PI / 3.0).cos() + shift,
            r * (phi - 4.0 * std::f64::consts::PI / 3.0).cos() + shift,
        ];
        return roots.map(|x| Complex64::new(x, 0.0));
    };
    let coeffs = [1.0, a, b, c];
    let r = polish(&coeffs, Complex64::new(real_root, 0.0)).re;
    // Deflate: λ³ + aλ² + bλ + c = (λ − r)(λ² + (a + r)λ + (b + r(a + r))).
    let [u, v] = quadratic_roots(a + r, b + r * (a + r));
    [Complex64::new(r, 0.0), u, v]
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (p, dp) = eval_poly(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = z - step;
        let (pn, _) = eval_poly(coeffs, next);
        if !(pn.norm() < p.norm()) {
            break;
        }
        z = next;
        if step.norm() <= 1e-16 * z.norm().max(1e-300) {
            break;
        }
    }
    if z.im.abs() <= 1e-14 * z.re.abs().max(1e-300) {
        z.im = 0.0;
    }
    z
}

fn symmetrize_pairs(values: &mut [Complex64]) {
    let n = values.len();
    for i in 0..n {
        if values[i].im < 0.0 {
            for j in 0..n {
                if j != i
                    && values[j].im > 0.0
                    && (values[j].conj() - values[i]).norm() <= 1e-8 * (1.0 + values[i].norm())
                {
                    let re = 0.5 * (values[i].re + values[j].re);
                    let im = 0.5 * (values[j].im - values[i].im);
                    values[i] = Complex64::new(re, -im);
                    values[j] = Complex64::new(re, im);
                }
            }
        }
    }
}

fn cross(u: &[Complex64], v: &[Complex64]) -> [Complex64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &[Complex64]) -> Vec<Complex64> {
    let n = norm(v);
    let mut out: Vec<Complex64> = v.iter().map(|c| c / n).collect();
    // Fix the phase: largest component real and positive.
    let k = (0..out.len())
        .max_by(|&i, &j| out[i].norm().partial_cmp(&out[j].norm()).unwrap())
        .unwrap_or(0);
    let ph = out[k].conj() / out[k].norm();
    for c in out.iter_mut() {
        *c *= ph;
    }
    out
}

/// Basis of the (numerical) null space of `A − λI`.
fn null_space(a: &Mat3, dim: usize, lambda: Complex64, scale: f64) -> Vec<Vec<Complex64>> {
    let tol = RANK_TOL * scale.max(lambda.norm());
    let rows: Vec<Vec<Complex64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
                    Complex64::new(a[i][j], 0.0) - d
                })
                .collect()
        })
        .collect();
    if dim == 2 {
        let r = if norm(&rows[0]) >= norm(&rows[1]) {
            &rows[0]
        } else {
            &rows[1]
        };
        if norm(r) <= tol {
            return vec![
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ];
        }
        return vec![normalize(&[r[1], -r[0]])];
    }
    let mut best = [Complex64::new(0.0, 0.0); 3];
    let mut best_norm = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = norm(&c);
        if n > best_norm {
            best_norm = n;
            best = c;
        }
    }
    if best_norm > tol * tol {
        return vec![normalize(&best)];
    }
    // Rank at most one: the null space is the complement of the largest row.
    let r = rows
        .iter()
        .max_by(|x, y| norm(x).partial_cmp(&norm(y)).unwrap())
        .unwrap();
    if norm(r) <= tol {
        return (0..3)
            .map(|k| {
                let mut e = vec![Complex64::new(0.0, 0.0); 3];
                e[k] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
    }
    // Two vectors v with r·v = 0 (bilinear), built from unit vectors.
    let k = (0..3)
        .max_by(|&i, &j| r[i].norm().partial_cmp(&r[j].norm()).unwrap())
        .unwrap();
    let mut basis = Vec::new();
    for l in 0..3 {
        if l == k {
            continue;
        }
        let mut v = vec![Complex64::new(0.0, 0.0); 3];
        v[l] = Complex64::new(1.0, 0.0);
        v[k] = -r[l] / r[k];
        basis.push(normalize(&v));
    }
    basis
}
