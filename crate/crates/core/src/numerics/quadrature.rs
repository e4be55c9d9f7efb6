//! Integration over the positive half line.
//!
//! The fast path is Gauss–Laguerre on an automatically rescaled integrand;
//! when two node counts disagree the integral is recomputed with adaptive
//! Gauss–Kronrod subdivision on a logarithmic variable.

use std::collections::BinaryHeap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::special::lse;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    GaussLaguerre,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub node_count: usize,
    pub method: QuadratureMethod,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            node_count: 128,
            method: QuadratureMethod::GaussLaguerre,
            rel_tol: 1e-9,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::InvalidParams(format!(
                "quadrature node_count must be at least 2, got {}",
                self.node_count
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "quadrature rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParams("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

/// Which path produced a quadrature result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraturePath {
    GaussLaguerre,
    Adaptive,
}

/// Gauss–Laguerre rule for weight e^{-x}: nodes and natural-log weights.
pub struct LaguerreRule {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

/// Cached Gauss–Laguerre rule with `n` nodes.
pub fn laguerre_rule(n: usize) -> &'static LaguerreRule {
    static CACHE: OnceLock<Mutex<Vec<(usize, &'static LaguerreRule)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, rule)) = guard.iter().find(|(m, _)| *m == n) {
        return rule;
    }
    let rule: &'static LaguerreRule = Box::leak(Box::new(build_laguerre(n)));
    guard.push((n, rule));
    rule
}

/// Returns (ln|L_n(x)|-scaled L_n, L_{n-1}, log scale) so that the true
/// values are `ln * exp(scale)` and `lnm1 * exp(scale)`.
fn laguerre_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 1.0; // L_0
    let mut cur = 1.0 - x; // L_1
    let mut log_scale = 0.0;
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e100 || (mag < 1e-100 && mag > 0.0) {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
    (cur, prev, log_scale)
}

fn build_laguerre(n: usize) -> LaguerreRule {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = 2.0 * i as f64 + 1.0;
        if i + 1 < n {
            jacobi[(i, i + 1)] = (i + 1) as f64;
            jacobi[(i + 1, i)] = (i + 1) as f64;
        }
    }
    let eig = jacobi.symmetric_eigen();
    // eigenvector weights are accurate where they are large; the recurrence
    // formula covers the tail where they underflow
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut log_weights = Vec::with_capacity(n);
    for (mut x, w_eig) in pairs {
        // Newton polish on L_n using x L_n' = n (L_n - L_{n-1})
        for _ in 0..8 {
            let (ln, lnm1, _) = laguerre_scaled(n, x);
            let deriv = nf * (ln - lnm1) / x;
            if deriv == 0.0 {
                break;
            }
            let step = ln / deriv;
            x -= step;
            if step.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        let lw = if w_eig > 1e-6 {
            w_eig.ln()
        } else {
            // w = x / (n^2 L_{n-1}(x)^2)
            let (_, lnm1, scale) = laguerre_scaled(n, x);
            x.ln() - 2.0 * nf.ln() - 2.0 * (lnm1.abs().ln() + scale)
        };
        nodes.push(x);
        log_weights.push(lw);
    }
    LaguerreRule { nodes, log_weights }
}

/// Shape of a log-integrand found by probing, used to rescale and centre
/// the quadrature rules.
struct Probe {
    /// Multiplicative rescaling for the Laguerre path.
    scale: f64,
    /// Location of the peak in ln u.
    centre: f64,
    /// Rough width of the peak in ln u.
    width: f64,
    /// Peak value of ln(u f(u)).
    peak: f64,
}

fn probe(log_f: &dyn Fn(f64) -> f64) -> Probe {
    // scan ln u on a coarse grid for the maximum of ln(u f(u))
    let mut best_s = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut s: f64 = -30.0;
    while s <= 30.0 {
        let v = s + log_f(s.exp());
        if v > best {
            best = v;
            best_s = s;
        }
        s += 0.25;
    }
    if !best.is_finite() {
        return Probe { scale: 1.0, centre: 0.0, width: 1.0, peak: 0.0 };
    }
    // golden-section refinement within the bracketing cell
    let g = |s: f64| s + log_f(s.exp());
    let (mut lo, mut hi) = (best_s - 0.25, best_s + 0.25);
    let r = 0.618_033_988_749_894_8;
    for _ in 0..40 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if g(a) > g(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let centre = 0.5 * (lo + hi);
    let peak = g(centre).max(best);
    let h = 1e-3;
    let curv = (g(centre + h) - 2.0 * g(centre) + g(centre - h)) / (h * h);
    // for u^{a-1} e^{-bu}: ln(u f) in s has curvature -a at the peak, and b = a / u*
    let (width, scale) = if curv.is_finite() && curv < -1e-8 {
        let a = -curv;
        (
            (1.0 / a.sqrt()).clamp(1e-3, 5.0),
            (centre.exp() / a).clamp(1e-8, 1e8),
        )
    } else {
        (1.0, centre.exp().clamp(1e-8, 1e8))
    };
    Probe { scale, centre, width, peak }
}

fn laguerre_log(log_f: &dyn Fn(f64) -> f64, scale: f64, n: usize) -> f64 {
    let rule = laguerre_rule(n);
    let terms: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.log_weights)
        .map(|(&x, &lw)| lw + x + log_f(scale * x))
        .collect();
    scale.ln() + lse(&terms)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = g(c - dx) + g(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integral of e^{log_f(u) - shift} over u in (0, ∞); returns the
/// natural log of the integral plus `shift`.
fn adaptive_log(log_f: &dyn Fn(f64) -> f64, probe: &Probe, cfg: &QuadratureConfig) -> Result<f64> {
    let shift = probe.peak;
    let (centre, width) = (probe.centre, probe.width);
    // s = centre + width * t / (1 - t^2), u = e^s
    let g = |t: f64| -> f64 {
        let one_m = 1.0 - t * t;
        if one_m <= 0.0 {
            return 0.0;
        }
        let s = centre + width * t / one_m;
        let jac = width * (1.0 + t * t) / (one_m * one_m);
        let u = s.exp();
        if !(u > 0.0 && u.is_finite()) {
            return 0.0;
        }
        let v = s + log_f(u) - shift;
        let out = v.exp() * jac;
        if out.is_finite() {
            out
        } else {
            0.0
        }
    };
    let mut heap = BinaryHeap::new();
    let pieces = 8;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for i in 0..pieces {
        let a = -1.0 + 2.0 * i as f64 / pieces as f64;
        let b = -1.0 + 2.0 * (i + 1) as f64 / pieces as f64;
        let (value, error) = gk15(&g, a, b);
        total += value;
        total_err += error;
        heap.push(Interval { a, b, value, error });
    }
    let mut subdivisions = 0;
    while total_err > cfg.rel_tol * 0.1 * total.abs() && total_err > 1e-300 {
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature exhausted {} subdivisions (estimated relative error {:.3e})",
                cfg.max_subdivisions,
                total_err / total.abs()
            )));
        }
        let worst = heap.pop().expect("heap holds the initial partition");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&g, worst.a, mid);
        let (v2, e2) = gk15(&g, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
    // re-sum in a fixed order to keep the result independent of heap history
    let mut parts: Vec<Interval> = heap.into_vec();
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    let sum: f64 = parts.iter().map(|p| p.value).sum();
    Ok(sum.ln() + shift)
}

/// `ln ∫₀^∞ exp(log_f(u)) du` together with the path that produced it.
pub fn log_integrate_half_line_traced<F>(log_f: F, cfg: &QuadratureConfig) -> Result<(f64, QuadraturePath)>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let log_f: &dyn Fn(f64) -> f64 = &log_f;
    let probe = probe(log_f);
    if !probe.peak.is_finite() {
        return Ok((f64::NEG_INFINITY, QuadraturePath::GaussLaguerre));
    }
    if cfg.method == QuadratureMethod::GaussLaguerre {
        let n = cfg.node_count;
        let coarse = laguerre_log(log_f, probe.scale, n);
        let fine = laguerre_log(log_f, probe.scale, n + n / 2);
        if coarse.is_finite() && fine.is_finite() && (coarse - fine).abs() <= cfg.rel_tol {
            return Ok((coarse, QuadraturePath::GaussLaguerre));
        }
    }
    Ok((adaptive_log(log_f, &probe, cfg)?, QuadraturePath::Adaptive))
}

/// `ln ∫₀^∞ exp(log_f(u)) du`, evaluated entirely in log space.
pub fn log_integrate_half_line<F>(log_f: F, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    log_integrate_half_line_traced(log_f, cfg).map(|(v, _)| v)
}

/// `∫₀^∞ f(u) du` for an integrand that decays integrably.
///
/// Signed integrands are split into positive and negative parts, each of
/// which is integrated in log space.
pub fn integrate_half_line<F>(f: F, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let pos = |u: f64| {
        let v = f(u);
        if v > 0.0 {
            v.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let neg = |u: f64| {
        let v = f(u);
        if v < 0.0 {
            (-v).ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let p = log_integrate_half_line(pos, cfg)?;
    let n = log_integrate_half_line(neg, cfg)?;
    Ok(p.exp() - n.exp())
}
