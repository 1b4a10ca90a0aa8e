//! The log partial likelihood over monthly event times, with analytic
//! gradient and observed information. Risk-set sums accumulate in reverse
//! time order, and the linear predictor is centered on its maximum before
//! exponentiation so large coefficients cannot overflow.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::encode::DesignMatrix;

/// Correction applied to tied event times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieMethod {
    #[default]
    Efron,
    Breslow,
}

impl fmt::Display for TieMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieMethod::Efron => "efron",
            TieMethod::Breslow => "breslow",
        })
    }
}

impl FromStr for TieMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "efron" => Ok(TieMethod::Efron),
            "breslow" => Ok(TieMethod::Breslow),
            other => Err(Error::Config(format!("unknown tie method `{other}`"))),
        }
    }
}

/// Value, gradient, and observed information (negative Hessian) of the log
/// partial likelihood at one beta.
#[derive(Debug, Clone)]
pub struct PlDerivatives<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub information: Matrix<T>,
}

struct RiskSums<T> {
    s0: T,
    s1: Vec<T>,
    s2: Matrix<T>,
}

impl<T: Scalar> RiskSums<T> {
    fn zero(k: usize) -> Self {
        RiskSums {
            s0: T::zero(),
            s1: vec![T::zero(); k],
            s2: Matrix::zeros(k, k),
        }
    }

    // upper triangle only; mirrored at the end of the evaluation
    fn add(&mut self, w: T, x: &[T]) {
        self.s0 = self.s0 + w;
        for (j, &xj) in x.iter().enumerate() {
            let wx = w * xj;
            self.s1[j] = self.s1[j] + wx;
            for (l, &xl) in x.iter().enumerate().skip(j) {
                self.s2.add_at(j, l, wx * xl);
            }
        }
    }
}

/// Evaluate the log partial likelihood. Rows are grouped by event month;
/// Efron subtracts a growing fraction of the tied-death sums from the risk
/// set, Breslow uses the full risk set for every tied death.
pub fn log_partial_likelihood<T: Scalar>(
    x: &DesignMatrix<T>,
    beta: &[T],
    ties: TieMethod,
) -> Result<PlDerivatives<T>> {
    let k = x.n_cols();
    if beta.len() != k {
        return Err(Error::Computation(format!(
            "beta has {} entries for {} columns",
            beta.len(),
            k
        )));
    }
    let n = x.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| x.rows[i].time);

    // linear predictors, centered for overflow safety
    let mut eta = vec![T::zero(); n];
    let mut eta_max = T::neg_infinity();
    for (i, row) in x.rows.iter().enumerate() {
        let mut e = T::zero();
        for (b, v) in beta.iter().zip(&row.x) {
            e = e + *b * *v;
        }
        if !e.is_finite() {
            return Err(Error::Computation(
                "non-finite linear predictor in partial likelihood".into(),
            ));
        }
        eta[i] = e;
        eta_max = eta_max.max(e);
    }
    if n == 0 || !eta_max.is_finite() {
        eta_max = T::zero();
    }

    let mut risk = RiskSums::zero(k);
    let mut value = T::zero();
    let mut gradient = vec![T::zero(); k];
    let mut information = Matrix::zeros(k, k);

    // walk distinct times from latest to earliest, growing the risk set
    let mut idx = n;
    while idx > 0 {
        let time = x.rows[order[idx - 1]].time;
        let mut start = idx;
        while start > 0 && x.rows[order[start - 1]].time == time {
            start -= 1;
        }
        let mut tied = RiskSums::zero(k);
        let mut death_x = vec![T::zero(); k];
        let mut d = 0u64;
        for &i in &order[start..idx] {
            let row = &x.rows[i];
            let w = (eta[i] - eta_max).exp();
            risk.add(w, &row.x);
            if row.event {
                d += 1;
                value = value + eta[i];
                tied.add(w, &row.x);
                for (j, &xj) in row.x.iter().enumerate() {
                    death_x[j] = death_x[j] + xj;
                }
            }
        }
        idx = start;
        if d == 0 {
            continue;
        }
        for (j, &dx) in death_x.iter().enumerate() {
            gradient[j] = gradient[j] + dx;
        }
        let dt = T::from_count(d);
        for l in 0..d {
            let frac = match ties {
                TieMethod::Efron => T::from_count(l) / dt,
                TieMethod::Breslow => T::zero(),
            };
            let denom = risk.s0 - frac * tied.s0;
            if denom <= T::zero() || !denom.is_finite() {
                return Err(Error::Computation(
                    "non-positive risk-set denominator in partial likelihood".into(),
                ));
            }
            value = value - (denom.ln() + eta_max);
            // mean covariate of the (adjusted) risk set
            let mut mu = vec![T::zero(); k];
            for j in 0..k {
                mu[j] = (risk.s1[j] - frac * tied.s1[j]) / denom;
                gradient[j] = gradient[j] - mu[j];
            }
            for j in 0..k {
                for m in j..k {
                    let s2 = risk.s2.get(j, m) - frac * tied.s2.get(j, m);
                    information.add_at(j, m, s2 / denom - mu[j] * mu[m]);
                }
            }
        }
    }

    // mirror the upper triangle
    for j in 0..k {
        for m in 0..j {
            let v = information.get(m, j);
            information.set(j, m, v);
        }
    }
    if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) || !information.is_finite() {
        return Err(Error::Computation(
            "non-finite partial likelihood derivatives".into(),
        ));
    }
    Ok(PlDerivatives {
        value,
        gradient,
        information,
    })
}
