//! Convex margin losses `l(y, f)` for labels `y` in `{-1, +1}`.
//!
//! Each loss is a function of the margin `m = y f` only:
//!
//! | loss       | `l`               | population minimizer `f*(p)` |
//! |------------|-------------------|------------------------------|
//! | hinge      | `max(0, 1 - m)`   | `sign(p - 1/2)`              |
//! | deviance   | `log(1 + e^{-m})` | `log(p / (1 - p))`           |
//! | exponential| `e^{-m}`          | `log(p / (1 - p)) / 2`       |
//! | squared    | `(1 - m)^2`       | `2p - 1`                     |
//!
//! Every minimizer has the sign of `p - 1/2`, i.e. each loss is Bayes
//! consistent. [`population_minimizer_numeric`] re-derives the last column
//! by direct 1-D minimization of the population risk.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Hinge,
    #[serde(rename = "deviance")]
    BinomialDeviance,
    Exponential,
    Squared,
}

impl Loss {
    pub const ALL: [Loss; 4] = [
        Loss::Hinge,
        Loss::BinomialDeviance,
        Loss::Exponential,
        Loss::Squared,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Loss::Hinge => "hinge",
            Loss::BinomialDeviance => "deviance",
            Loss::Exponential => "exponential",
            Loss::Squared => "squared",
        }
    }

    pub fn is_twice_differentiable(&self) -> bool {
        !matches!(self, Loss::Hinge)
    }

    /// Loss as a function of the margin `m = y f`.
    #[inline]
    pub fn of_margin(&self, m: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - m).max(0.0),
            Loss::BinomialDeviance => {
                if m >= 0.0 {
                    (-m).exp().ln_1p()
                } else {
                    -m + m.exp().ln_1p()
                }
            }
            Loss::Exponential => (-m).exp(),
            Loss::Squared => (1.0 - m) * (1.0 - m),
        }
    }

    /// Derivative with respect to the margin. Hinge uses the flat-side
    /// subgradient 0 at the kink `m = 1`.
    #[inline]
    pub fn margin_derivative(&self, m: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if m < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::BinomialDeviance => -logistic(-m),
            Loss::Exponential => -(-m).exp(),
            Loss::Squared => -2.0 * (1.0 - m),
        }
    }

    /// Second derivative with respect to the margin (equal to the second
    /// derivative in `f`, since `y^2 = 1`).
    #[inline]
    pub fn margin_curvature(&self, m: f64) -> Result<f64> {
        match self {
            Loss::Hinge => Err(Error::NotTwiceDifferentiable("hinge")),
            Loss::BinomialDeviance => Ok(logistic(m) * logistic(-m)),
            Loss::Exponential => Ok((-m).exp()),
            Loss::Squared => Ok(2.0),
        }
    }

    /// `l(y, f)`.
    pub fn value(&self, y: f64, f: f64) -> Result<f64> {
        check_label(y)?;
        Ok(self.of_margin(y * f))
    }

    /// `dl/df`.
    pub fn gradient(&self, y: f64, f: f64) -> Result<f64> {
        check_label(y)?;
        Ok(y * self.margin_derivative(y * f))
    }

    /// `d²l/df²`.
    pub fn curvature(&self, y: f64, f: f64) -> Result<f64> {
        check_label(y)?;
        self.margin_curvature(y * f)
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hinge" | "svm" => Ok(Loss::Hinge),
            "deviance" | "binomial" | "logistic" | "binomial-deviance" => {
                Ok(Loss::BinomialDeviance)
            }
            "exponential" | "exp" => Ok(Loss::Exponential),
            "squared" | "square" => Ok(Loss::Squared),
            other => Err(Error::input(format!("unknown loss `{other}`"))),
        }
    }
}

/// `1 / (1 + e^{-t})`, stable for large `|t|`.
#[inline]
pub(crate) fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_label(y: f64) -> Result<()> {
    if y == 1.0 || y == -1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("label must be -1 or +1, got {y}")))
    }
}

pub fn loss_value(loss: Loss, y: f64, f: f64) -> Result<f64> {
    loss.value(y, f)
}

pub fn loss_gradient(loss: Loss, y: f64, f: f64) -> Result<f64> {
    loss.gradient(y, f)
}

pub fn loss_curvature(loss: Loss, y: f64, f: f64) -> Result<f64> {
    loss.curvature(y, f)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::input(format!("probability must lie in [0, 1], got {p}")))
    }
}

/// `p l(+1, f) + (1 - p) l(-1, f)`: expected loss when `P(y = +1) = p`.
pub fn population_risk(loss: Loss, p: f64, f: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(risk(loss, p, f))
}

#[inline]
fn risk(loss: Loss, p: f64, f: f64) -> f64 {
    // Skip zero-weight terms so that e.g. the exponential loss at p = 1
    // does not produce 0 * inf.
    let pos = if p > 0.0 { p * loss.of_margin(f) } else { 0.0 };
    let neg = if p < 1.0 {
        (1.0 - p) * loss.of_margin(-f)
    } else {
        0.0
    };
    pos + neg
}

/// Closed-form minimizer of [`population_risk`] over `f`.
///
/// For the hinge loss at `p = 1/2` every `f` in `[-1, 1]` is a minimizer;
/// `+1` is returned so that the induced rule agrees with the `sign(0) = +1`
/// tie rule used for classification.
pub fn population_minimizer(loss: Loss, p: f64) -> Result<f64> {
    check_probability(p)?;
    match loss {
        Loss::Hinge => Ok(if p >= 0.5 { 1.0 } else { -1.0 }),
        Loss::Squared => Ok(2.0 * p - 1.0),
        Loss::BinomialDeviance | Loss::Exponential => {
            if p == 0.0 || p == 1.0 {
                return Err(Error::Divergence(format!(
                    "{loss} risk has no finite minimizer at p = {p}"
                )));
            }
            let logit = (p / (1.0 - p)).ln();
            Ok(if loss == Loss::Exponential {
                0.5 * logit
            } else {
                logit
            })
        }
    }
}

/// Search interval of the numeric oracle.
pub const NUMERIC_SEARCH_RANGE: (f64, f64) = (-30.0, 30.0);
const GOLDEN_TOLERANCE: f64 = 1e-6;
const HINGE_GRID_STEP: f64 = 1e-4;

/// Minimizing set `[lower, upper]` of the population risk found by direct
/// search, independent of the closed forms.
///
/// Smooth losses use golden-section search to a bracket width of `1e-6`
/// (the set is a single point). The piecewise-linear hinge risk is scanned
/// on a grid with step `1e-4`; the set is the range of grid points whose
/// risk ties the minimum, with each end refined by bisection against the
/// neighbouring grid point.
pub fn population_minimizing_set_numeric(loss: Loss, p: f64) -> Result<(f64, f64)> {
    check_probability(p)?;
    if p == 0.0 || p == 1.0 {
        return Err(Error::Divergence(format!(
            "numeric minimizer requires 0 < p < 1, got {p}"
        )));
    }
    let (lo, hi) = NUMERIC_SEARCH_RANGE;
    if loss != Loss::Hinge {
        let x = golden_section(|f| risk(loss, p, f), lo, hi, GOLDEN_TOLERANCE);
        return Ok((x, x));
    }

    let steps = ((hi - lo) / HINGE_GRID_STEP).round() as usize;
    let grid = |i: usize| lo + i as f64 * HINGE_GRID_STEP;
    let values: Vec<f64> = (0..=steps).map(|i| risk(loss, p, grid(i))).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * (1.0 + best.abs());
    let first = values.iter().position(|&v| v <= best + tie).unwrap();
    let last = values.iter().rposition(|&v| v <= best + tie).unwrap();

    let on_set = |f: f64| risk(loss, p, f) <= best + tie;
    let lower = if first == 0 {
        grid(0)
    } else {
        bisect_boundary(on_set, grid(first - 1), grid(first))
    };
    let upper = if last == steps {
        grid(steps)
    } else {
        bisect_boundary(on_set, grid(last + 1), grid(last))
    };
    Ok((lower, upper))
}

/// Numeric population minimizer: the midpoint of
/// [`population_minimizing_set_numeric`]. Away from the hinge tie at
/// `p = 1/2` the set is a single point.
pub fn population_minimizer_numeric(loss: Loss, p: f64) -> Result<f64> {
    let (lo, hi) = population_minimizing_set_numeric(loss, p)?;
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Boundary between `outside` (predicate false) and `inside` (true).
fn bisect_boundary(pred: impl Fn(f64) -> bool, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (outside + inside);
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}
