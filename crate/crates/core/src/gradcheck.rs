//! Central finite-difference checks of reverse-mode gradients.
//!
//! ReLU and max-pool make networks piecewise smooth. When a switch point lies
//! inside `[x - h, x + h]` the central difference is not an estimate of the
//! derivative at `x`, so each entry is probed at `h`, `h/10`, ... and compared
//! at the first step whose estimate agrees with the next smaller one. Entries
//! where no two consecutive steps agree are reported as kinks rather than
//! compared. The choice of step never looks at the analytic gradient.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::params::{Bound, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    /// Largest central-difference step.
    pub h: f64,
    /// Gradient magnitude below which errors are measured absolutely.
    pub floor: f64,
    /// Agreement required between estimates at consecutive steps; kept below
    /// the comparison tolerance so a kink-biased estimate cannot pass.
    pub smooth_tol: f64,
    /// How many times the step may shrink by 10.
    pub refinements: u32,
}

impl Default for GradCheck {
    /// Kink-aware checking for piecewise-smooth functions such as whole
    /// networks. Consecutive estimates must agree to 3e-5, about three times
    /// the roundoff seen at `h/10` for unit-scale losses.
    fn default() -> Self {
        GradCheck {
            h: 1e-5,
            floor: 1e-5,
            smooth_tol: 3e-5,
            refinements: 2,
        }
    }
}

impl GradCheck {
    /// A single central difference at `h = 1e-5`, for functions that are
    /// smooth at the probed point.
    pub fn plain() -> Self {
        GradCheck {
            refinements: 0,
            ..GradCheck::default()
        }
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// Step the numeric estimate was taken at.
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    /// Entries compared against a finite difference.
    pub checked: usize,
    pub max_rel_error: f64,
    /// The compared entry with the largest relative error.
    pub worst: Option<Mismatch>,
    /// Entries with a switch point within every probed step.
    pub kinks: Vec<(String, usize)>,
}

impl GradReport {
    pub fn kink_fraction(&self) -> f64 {
        let total = self.checked + self.kinks.len();
        if total == 0 {
            0.0
        } else {
            self.kinks.len() as f64 / total as f64
        }
    }
}

impl GradCheck {
    /// Compares autodiff gradients of the scalar built by `f` against central
    /// differences at the given `(parameter, flat index)` entries.
    pub fn run(
        &self,
        params: &ParamStore,
        entries: &[(String, usize)],
        f: impl Fn(&mut Graph, &Bound) -> Result<Var>,
    ) -> Result<GradReport> {
        let eval = |p: &ParamStore| -> Result<f64> {
            let mut g = Graph::new();
            let b = p.bind(&mut g);
            let l = f(&mut g, &b)?;
            Ok(g.value(l).item())
        };
        let mut g = Graph::new();
        let b = params.bind(&mut g);
        let loss = f(&mut g, &b)?;
        let grads = g.backward(loss)?.params(&g);

        let mut report = GradReport {
            checked: 0,
            max_rel_error: 0.0,
            worst: None,
            kinks: Vec::new(),
        };
        let mut probe = params.clone();
        for (name, idx) in entries {
            let missing = || Error::InvalidArgument(format!("no parameter entry {name}[{idx}]"));
            let orig = *params.get(name).and_then(|t| t.data().get(*idx)).ok_or_else(missing)?;
            let mut central = |h: f64| -> Result<f64> {
                let mut at = |v: f64| {
                    probe.get_mut(name).expect("checked").data_mut()[*idx] = v;
                    eval(&probe)
                };
                let up = at(orig + h)?;
                let down = at(orig - h)?;
                probe.get_mut(name).expect("checked").data_mut()[*idx] = orig;
                Ok((up - down) / (2.0 * h))
            };
            let mut h = self.h;
            let mut est = central(h)?;
            let mut smooth = (self.refinements == 0).then_some((est, h));
            for _ in 0..self.refinements {
                let finer = central(h / 10.0)?;
                if relative_error(est, finer, self.floor) <= self.smooth_tol {
                    smooth = Some((est, h));
                    break;
                }
                h /= 10.0;
                est = finer;
            }
            let Some((numeric, h)) = smooth else {
                report.kinks.push((name.clone(), *idx));
                continue;
            };
            let analytic = grads[name].data()[*idx];
            let err = relative_error(analytic, numeric, self.floor);
            report.checked += 1;
            if err >= report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some(Mismatch {
                    param: name.clone(),
                    index: *idx,
                    analytic,
                    numeric,
                    h,
                });
            }
        }
        Ok(report)
    }

    /// Every entry of every parameter.
    pub fn run_all(&self, params: &ParamStore, f: impl Fn(&mut Graph, &Bound) -> Result<Var>) -> Result<GradReport> {
        let entries: Vec<(String, usize)> = params
            .iter()
            .flat_map(|(n, t)| (0..t.numel()).map(move |i| (n.clone(), i)))
            .collect();
        self.run(params, &entries, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn cubic_gradient() {
        let mut p = ParamStore::new();
        p.insert("x", Tensor::vector(vec![0.7, -1.3]));
        let r = GradCheck::plain()
            .run_all(&p, |g, b| {
                let x = b.var("x")?;
                let x2 = g.mul(x, x)?;
                let x3 = g.mul(x2, x)?;
                Ok(g.sum(x3))
            })
            .unwrap();
        assert_eq!(r.checked, 2);
        assert!(r.kinks.is_empty());
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn kink_inside_every_step_is_reported() {
        let mut p = ParamStore::new();
        p.insert("x", Tensor::vector(vec![1e-9, 0.5]));
        let r = GradCheck::default()
            .run_all(&p, |g, b| {
                let x = b.var("x")?;
                let y = g.relu(x);
                Ok(g.sum(y))
            })
            .unwrap();
        assert_eq!(r.kinks, vec![("x".to_string(), 0)]);
        assert_eq!(r.checked, 1);
        assert_eq!(r.kink_fraction(), 0.5);
    }

    #[test]
    fn nearby_kink_is_stepped_past() {
        let mut p = ParamStore::new();
        // Switch point 3e-6 above x: inside the 1e-5 bracket only.
        p.insert("x", Tensor::vector(vec![-3e-6]));
        let r = GradCheck::default()
            .run_all(&p, |g, b| {
                let x = b.var("x")?;
                let y = g.relu(x);
                let z = g.affine(x, 0.25, 0.0);
                let s = g.add(y, z)?;
                Ok(g.sum(s))
            })
            .unwrap();
        assert_eq!(r.checked, 1);
        let w = r.worst.unwrap();
        assert!((w.h - 1e-6).abs() < 1e-18);
        assert!(r.max_rel_error < 1e-9, "{w:?}");
    }

    #[test]
    fn relative_error_uses_floor() {
        assert!((relative_error(1.0, 1.1, 1e-5) - 0.1 / 1.1).abs() < 1e-15);
        assert!((relative_error(1e-9, -1e-9, 1e-5) - 2e-4).abs() < 1e-15);
    }

    #[test]
    fn unknown_entry_is_an_error() {
        let mut p = ParamStore::new();
        p.insert("x", Tensor::vector(vec![0.5]));
        let r = GradCheck::default().run(&p, &[("x".into(), 3)], |g, b| {
            let x = b.var("x")?;
            Ok(g.sum(x))
        });
        assert!(r.is_err());
    }
}
