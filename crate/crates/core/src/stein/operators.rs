//! Characterizing operators of non-normal target laws and the zero-mean
//! characterization test: E[𝒮A(Z)] vanishes for every admissible A exactly
//! when Z has the target distribution.

use crate::mc::{run_chunks, McOptions};
use crate::numeric::normal::sample_standard_normal;
use crate::numeric::sum::MeanVar;
use crate::rng::Stream;
use crate::{Error, Result};

/// Supported target distributions with their operator parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetOperator {
    Poisson { lambda: f64 },
    /// Exponential with mean one.
    Exponential,
    Binomial { n: u64, p: f64 },
    /// Gamma(r, λ). The printed operator's first-derivative factor is read as
    /// A′ (see crate docs); the gamma characterization is advisory.
    Gamma { r: f64, lambda: f64 },
    Normal { sigma2: f64 },
}

impl TargetOperator {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetOperator::Poisson { lambda } if lambda.is_nan() || *lambda <= 0.0 => {
                Err(Error::Contract(format!("Poisson mean must be positive, got {lambda}")))
            }
            TargetOperator::Binomial { p, .. } if p.is_nan() || *p <= 0.0 || *p >= 1.0 => {
                Err(Error::Contract(format!("binomial success probability must lie in (0,1), got {p}")))
            }
            TargetOperator::Gamma { r, lambda } if r.is_nan() || lambda.is_nan() || *r <= 0.0 || *lambda <= 0.0 => {
                Err(Error::Contract(format!("gamma parameters must be positive, got r={r}, λ={lambda}")))
            }
            TargetOperator::Normal { sigma2 } if sigma2.is_nan() || *sigma2 <= 0.0 => {
                Err(Error::Contract(format!("normal variance must be positive, got {sigma2}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TargetOperator::Poisson { lambda } => format!("poisson({lambda})"),
            TargetOperator::Exponential => "exponential".into(),
            TargetOperator::Binomial { n, p } => format!("binomial({n},{p})"),
            TargetOperator::Gamma { r, lambda } => format!("gamma({r},{lambda})"),
            TargetOperator::Normal { sigma2 } => format!("normal({sigma2})"),
        }
    }

    fn support_ok(&self, w: f64) -> bool {
        match self {
            TargetOperator::Poisson { .. } | TargetOperator::Gamma { .. } | TargetOperator::Exponential => w >= 0.0,
            TargetOperator::Binomial { n, .. } => w >= 0.0 && w <= *n as f64,
            TargetOperator::Normal { .. } => true,
        }
    }

    /// Support interval (lo, hi) of the law the operator characterizes.
    fn support(&self) -> (f64, f64) {
        match self {
            TargetOperator::Poisson { .. } | TargetOperator::Gamma { .. } | TargetOperator::Exponential => {
                (0.0, f64::INFINITY)
            }
            TargetOperator::Binomial { n, .. } => (0.0, *n as f64),
            TargetOperator::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Bounded test functions with two bounded derivatives for the
/// characterization panels.
#[derive(Clone, Copy, Debug)]
pub enum CharFn {
    Zero,
    One,
    /// A(w) = w (unbounded; for operator arithmetic, not the panels)
    Identity,
    Sin,
    Cos,
    /// e^{-w}
    ExpNeg,
    /// 1/(1+w²)
    InvQuad,
    Tanh,
    /// w·e^{-w²/2}
    GaussBump,
}

impl CharFn {
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            CharFn::Zero => 0.0,
            CharFn::One => 1.0,
            CharFn::Identity => w,
            CharFn::Sin => w.sin(),
            CharFn::Cos => w.cos(),
            CharFn::ExpNeg => (-w).exp(),
            CharFn::InvQuad => 1.0 / (1.0 + w * w),
            CharFn::Tanh => w.tanh(),
            CharFn::GaussBump => w * (-w * w / 2.0).exp(),
        }
    }

    pub fn d1(&self, w: f64) -> f64 {
        match self {
            CharFn::Zero | CharFn::One => 0.0,
            CharFn::Identity => 1.0,
            CharFn::Sin => w.cos(),
            CharFn::Cos => -w.sin(),
            CharFn::ExpNeg => -(-w).exp(),
            CharFn::InvQuad => -2.0 * w / (1.0 + w * w).powi(2),
            CharFn::Tanh => 1.0 / w.cosh().powi(2),
            CharFn::GaussBump => (1.0 - w * w) * (-w * w / 2.0).exp(),
        }
    }

    pub fn d2(&self, w: f64) -> f64 {
        match self {
            CharFn::Zero | CharFn::One | CharFn::Identity => 0.0,
            CharFn::Sin => -w.sin(),
            CharFn::Cos => -w.cos(),
            CharFn::ExpNeg => (-w).exp(),
            CharFn::InvQuad => (6.0 * w * w - 2.0) / (1.0 + w * w).powi(3),
            CharFn::Tanh => -2.0 * w.tanh() / w.cosh().powi(2),
            CharFn::GaussBump => w * (w * w - 3.0) * (-w * w / 2.0).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CharFn::Zero => "zero",
            CharFn::One => "one",
            CharFn::Identity => "identity",
            CharFn::Sin => "sin",
            CharFn::Cos => "cos",
            CharFn::ExpNeg => "exp_neg",
            CharFn::InvQuad => "inv_quad",
            CharFn::Tanh => "tanh",
            CharFn::GaussBump => "gauss_bump",
        }
    }
}

/// Default characterization panel: bounded members with bounded derivatives
/// and enough variety to separate the target laws.
pub fn default_char_panel() -> Vec<CharFn> {
    vec![CharFn::Sin, CharFn::Cos, CharFn::ExpNeg, CharFn::InvQuad, CharFn::Tanh, CharFn::GaussBump]
}

/// Applies the target's characterizing operator to A at w.
pub fn stein_operator_apply(target: &TargetOperator, a: &CharFn, w: f64) -> Result<f64> {
    target.validate()?;
    if !target.support_ok(w) {
        return Err(Error::Contract(format!(
            "argument {w} outside the support of {}",
            target.name()
        )));
    }
    Ok(match target {
        TargetOperator::Poisson { lambda } => lambda * a.eval(w + 1.0) - w * a.eval(w),
        TargetOperator::Exponential => w * a.d1(w) - (w - 1.0) * a.eval(w),
        TargetOperator::Binomial { n, p } => {
            p * (*n as f64 - w) * a.eval(w + 1.0) - (1.0 - p) * w * a.eval(w)
        }
        TargetOperator::Gamma { r, lambda } => w * a.d2(w) + (r - lambda * w) * a.d1(w),
        TargetOperator::Normal { sigma2 } => sigma2 * a.d1(w) - w * a.eval(w),
    })
}

/// Draws one sample of the target law (deterministic given the stream).
pub fn sample_target(target: &TargetOperator, stream: &mut Stream) -> f64 {
    match target {
        TargetOperator::Normal { sigma2 } => sigma2.sqrt() * sample_standard_normal(stream),
        TargetOperator::Exponential => -(1.0 - stream.next_f64()).ln(),
        TargetOperator::Poisson { lambda } => {
            // Knuth's product method; fine for the moderate means used here.
            let limit = (-lambda).exp();
            let mut k = 0u64;
            let mut prod = 1.0;
            loop {
                prod *= stream.next_open01();
                if prod <= limit {
                    return k as f64;
                }
                k += 1;
            }
        }
        TargetOperator::Binomial { n, p } => {
            let mut k = 0u64;
            for _ in 0..*n {
                if stream.next_f64() < *p {
                    k += 1;
                }
            }
            k as f64
        }
        TargetOperator::Gamma { r, lambda } => {
            // Marsaglia–Tsang, with the boost for shape < 1.
            let (shape, boost) = if *r < 1.0 {
                (*r + 1.0, stream.next_open01().powf(1.0 / r))
            } else {
                (*r, 1.0)
            };
            let d = shape - 1.0 / 3.0;
            let c = 1.0 / (9.0 * d).sqrt();
            loop {
                let x = sample_standard_normal(stream);
                let v = 1.0 + c * x;
                if v <= 0.0 {
                    continue;
                }
                let v3 = v * v * v;
                let u = stream.next_open01();
                if u.ln() < 0.5 * x * x + d - d * v3 + d * v3.ln() {
                    return boost * d * v3 / lambda;
                }
            }
        }
    }
}

/// One row of the characterization table.
#[derive(Clone, Debug)]
pub struct CharRow {
    pub member: &'static str,
    pub mean: f64,
    pub se: f64,
}

/// Samples Z from `source`, applies `operator`'s Stein operator over the
/// panel, and reports per-member means with standard errors. When source and
/// operator agree every |mean| stays within sampling error of zero; a
/// mismatched source is rejected by at least one panel member.
pub fn characterization_test(
    operator: &TargetOperator,
    source: &TargetOperator,
    panel: &[CharFn],
    opts: &McOptions,
    stream: &Stream,
) -> Result<Vec<CharRow>> {
    operator.validate()?;
    source.validate()?;
    let (op_lo, op_hi) = operator.support();
    let (src_lo, src_hi) = source.support();
    if src_lo < op_lo || src_hi > op_hi {
        return Err(Error::Contract(format!(
            "samples from {} leave the support of the {} operator",
            source.name(),
            operator.name()
        )));
    }
    let master = stream.child(0xC0);
    let np = panel.len();
    let chunks = run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
        let mut acc = vec![MeanVar::default(); np];
        for j in 0..count {
            let mut s = master.child((start + j) as u64);
            let z = sample_target(source, &mut s);
            for (i, a) in panel.iter().enumerate() {
                let v = stein_operator_apply(operator, a, z).expect("sample left the operator support");
                acc[i].add(v);
            }
        }
        acc
    });
    let mut acc = vec![MeanVar::default(); np];
    for chunk in chunks {
        for (t, s) in acc.iter_mut().zip(&chunk) {
            t.merge(s);
        }
    }
    Ok(panel
        .iter()
        .zip(&acc)
        .map(|(a, m)| CharRow { member: a.name(), mean: m.mean(), se: m.se() })
        .collect())
}
