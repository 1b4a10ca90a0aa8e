//! Greedy forward covariate selection: each round fits one candidate model
//! per pending variable, keeps only models whose coefficients are all
//! significant, and accepts the best AIC improvement. Selection stops when no
//! candidate survives the p-filter, none improves the AIC, or the pending
//! list runs dry.

use crate::cox::{fit, CoxModel, DesignMatrix, FitOptions};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which surviving candidate a round accepts. `BestImprover` evaluates every
/// pending variable and takes the lowest AIC; `FirstImprover` accepts the
/// first scanned variable that improves on the incumbent, mirroring a strict
/// sequential reading of the algorithm. The two can select different models;
/// both are deterministic in the declared candidate order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    #[default]
    BestImprover,
    FirstImprover,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions<T> {
    pub p_threshold: T,
    pub mode: SelectionMode,
    pub fit: FitOptions<T>,
}

impl<T: Scalar> Default for SelectionOptions<T> {
    fn default() -> Self {
        SelectionOptions {
            p_threshold: T::from_f64_lossy(0.05),
            mode: SelectionMode::BestImprover,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionStep<T> {
    pub variable: String,
    pub aic: T,
    /// Per-coefficient p-values of the model accepted at this step.
    pub p_values: Vec<(String, T)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    NoImprovement,
    NoSignificantModel,
    PendingExhausted,
}

/// A candidate whose fit failed this round (singularity, divergence); it is
/// treated as not significant rather than aborting the selection.
#[derive(Debug, Clone)]
pub struct FitFailure {
    pub round: usize,
    pub variable: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SelectionTrace<T> {
    pub steps: Vec<SelectionStep<T>>,
    pub final_variables: Vec<String>,
    pub stop_reason: StopReason,
    pub fit_failures: Vec<FitFailure>,
}

pub fn write_selection_trace<T: Scalar>(trace: &SelectionTrace<T>) -> String {
    let mut out = String::from("step,variable,aic,worst_p\n");
    for (i, step) in trace.steps.iter().enumerate() {
        let worst = step
            .p_values
            .iter()
            .map(|(_, p)| p.to_f64().unwrap_or(f64::NAN))
            .fold(f64::NAN, f64::max);
        out.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            i + 1,
            step.variable,
            step.aic.to_f64().unwrap_or(f64::NAN),
            worst
        ));
    }
    out
}

struct RoundOutcome<T> {
    variable: String,
    model: CoxModel<T>,
}

/// Run greedy forward selection over `candidates` (a subset of the design
/// matrix columns). Returns the final model and the full trace. An empty
/// candidate list yields the null model.
pub fn greedy_select<T: Scalar>(
    x_full: &DesignMatrix<T>,
    candidates: &[String],
    opts: &SelectionOptions<T>,
) -> Result<(CoxModel<T>, SelectionTrace<T>)> {
    for c in candidates {
        if !x_full.names.contains(c) {
            return Err(Error::Config(format!(
                "selection candidate `{c}` is not a design matrix column"
            )));
        }
    }
    let mut pending: Vec<String> = candidates.to_vec();
    let mut selected: Vec<String> = Vec::new();
    let mut best_model = fit(&x_full.select_columns(&[])?, &opts.fit)?;
    let mut best_aic = T::infinity();
    let mut steps = Vec::new();
    let mut fit_failures = Vec::new();
    let mut round = 0usize;

    let stop_reason = loop {
        if pending.is_empty() {
            break StopReason::PendingExhausted;
        }
        round += 1;
        let mut any_survivor = false;
        let mut accepted: Option<RoundOutcome<T>> = None;

        for variable in &pending {
            let mut trial = selected.clone();
            trial.push(variable.clone());
            let sub = x_full.select_columns(&trial)?;
            let model = match fit(&sub, &opts.fit) {
                Ok(m) => m,
                Err(e) => {
                    fit_failures.push(FitFailure {
                        round,
                        variable: variable.clone(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let significant = model
                .worst_p()
                .is_none_or(|worst| worst <= opts.p_threshold);
            if !significant || model.monotone_warning {
                continue;
            }
            any_survivor = true;
            match opts.mode {
                SelectionMode::BestImprover => {
                    let better_than_accepted = accepted
                        .as_ref()
                        .is_none_or(|a| model.aic < a.model.aic);
                    if better_than_accepted {
                        accepted = Some(RoundOutcome {
                            variable: variable.clone(),
                            model,
                        });
                    }
                }
                SelectionMode::FirstImprover => {
                    if model.aic < best_aic {
                        accepted = Some(RoundOutcome {
                            variable: variable.clone(),
                            model,
                        });
                        break;
                    }
                }
            }
        }

        let improving = accepted
            .as_ref()
            .is_some_and(|a| a.model.aic < best_aic);
        if !improving {
            break if any_survivor {
                StopReason::NoImprovement
            } else {
                StopReason::NoSignificantModel
            };
        }
        let outcome = accepted.unwrap();
        best_aic = outcome.model.aic;
        pending.retain(|v| *v != outcome.variable);
        selected.push(outcome.variable.clone());
        steps.push(SelectionStep {
            variable: outcome.variable,
            aic: best_aic,
            p_values: outcome
                .model
                .names
                .iter()
                .cloned()
                .zip(outcome.model.p_values.iter().copied())
                .collect(),
        });
        best_model = outcome.model;
    };

    Ok((
        best_model,
        SelectionTrace {
            steps,
            final_variables: selected,
            stop_reason,
            fit_failures,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cox::{DesignRow, TieMethod};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    // survival times from a geometric model: monthly death probability
    // 1 - exp(-h) with h = base * exp(effect . x)
    fn simulate(
        n: usize,
        effects: &[f64],
        base_hazard: f64,
        horizon: u32,
        seed: u64,
        names: &[&str],
    ) -> DesignMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = effects.iter().map(|_| f64::from(rng.random::<bool>())).collect();
            let lp: f64 = effects.iter().zip(&x).map(|(e, v)| e * v).sum();
            let hazard = base_hazard * lp.exp();
            let p_death = 1.0 - (-hazard).exp();
            let u: f64 = rng.random();
            let t = (1.0 - u).ln() / (1.0 - p_death).ln();
            let t = t.floor().max(0.0) as u32;
            let (time, event) = if t > horizon { (horizon, false) } else { (t, true) };
            rows.push(DesignRow { x, time, event });
        }
        DesignMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            rows,
            defaults: None,
        }
    }

    #[test]
    fn empty_candidates_yield_null_model() {
        let x = simulate(60, &[0.8, 0.0], 0.02, 60, 3, &["real", "noise"]);
        let (model, trace) = greedy_select(&x, &[], &SelectionOptions::default()).unwrap();
        assert!(model.beta.is_empty());
        assert!(trace.steps.is_empty());
        assert_eq!(trace.stop_reason, StopReason::PendingExhausted);
        assert!((model.aic - (-2.0 * model.log_pl)).abs() < 1e-12);
    }

    #[test]
    fn planted_covariate_is_selected_before_noise() {
        let x = simulate(
            600,
            &[1.2, 0.0, 0.0],
            0.02,
            60,
            42,
            &["planted", "noise_a", "noise_b"],
        );
        let candidates: Vec<String> = x.names.clone();
        let (model, trace) = greedy_select(&x, &candidates, &SelectionOptions::default()).unwrap();
        assert_eq!(trace.steps[0].variable, "planted");
        // the returned model is exactly the accumulated additions
        assert_eq!(model.names, trace.final_variables);
        // trace invariants: strictly decreasing AIC, all retained p below cut
        let mut prev = f64::INFINITY;
        for step in &trace.steps {
            assert!(step.aic < prev);
            prev = step.aic;
            for (name, p) in &step.p_values {
                assert!(*p <= 0.05, "{name} p = {p}");
            }
        }
        assert_eq!(trace.final_variables.len(), trace.steps.len());
    }

    #[test]
    fn first_improver_mode_also_recovers_planted_column() {
        let x = simulate(
            600,
            &[1.2, 0.0],
            0.02,
            60,
            7,
            &["planted", "noise"],
        );
        let candidates: Vec<String> = x.names.clone();
        let opts = SelectionOptions {
            mode: SelectionMode::FirstImprover,
            ..SelectionOptions::default()
        };
        let (_, trace) = greedy_select(&x, &candidates, &opts).unwrap();
        assert!(trace
            .final_variables
            .contains(&"planted".to_string()));
    }

    #[test]
    fn failed_fits_are_recorded_and_skipped() {
        let mut x = simulate(200, &[1.0], 0.03, 60, 9, &["real"]);
        // a constant column can never be fitted
        for row in &mut x.rows {
            row.x.push(1.0);
        }
        x.names.push("constant".into());
        let candidates: Vec<String> = x.names.clone();
        let (_, trace) = greedy_select(&x, &candidates, &SelectionOptions::default()).unwrap();
        assert!(trace
            .fit_failures
            .iter()
            .any(|f| f.variable == "constant"));
        assert!(!trace.final_variables.contains(&"constant".to_string()));
    }

    #[test]
    fn pure_noise_candidates_stop_without_selection() {
        let x = simulate(400, &[0.0, 0.0], 0.02, 48, 11, &["noise_a", "noise_b"]);
        let candidates: Vec<String> = x.names.clone();
        let (model, trace) = greedy_select(&x, &candidates, &SelectionOptions::default()).unwrap();
        // noise columns are overwhelmingly insignificant at n=400
        if trace.steps.is_empty() {
            assert!(matches!(
                trace.stop_reason,
                StopReason::NoSignificantModel | StopReason::NoImprovement
            ));
            assert!(model.beta.is_empty());
        }
    }

    #[test]
    fn selection_is_deterministic() {
        let x = simulate(300, &[0.9, 0.0, 0.0], 0.02, 60, 5, &["a", "b", "c"]);
        let candidates: Vec<String> = x.names.clone();
        let opts = SelectionOptions {
            fit: FitOptions {
                ties: TieMethod::Efron,
                ..FitOptions::default()
            },
            ..SelectionOptions::default()
        };
        let (m1, t1) = greedy_select(&x, &candidates, &opts).unwrap();
        let (m2, t2) = greedy_select(&x, &candidates, &opts).unwrap();
        assert_eq!(m1.beta, m2.beta);
        assert_eq!(t1.final_variables, t2.final_variables);
        assert_eq!(t1.steps.len(), t2.steps.len());
    }
}
