//! Central finite-difference verification of analytic gradients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{Grads, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Coordinates sampled per tensor (all of them when the tensor is smaller).
    pub coords_per_tensor: usize,
    /// Denominator floor of the relative error. Central differences at ε = 1e-5
    /// carry absolute errors near 1e-10, so tinier gradients are compared absolutely.
    pub floor: f64,
    pub seed: u64,
    /// Only parameters whose name starts with one of these; all when empty.
    pub prefixes: Vec<String>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { eps: 1e-5, coords_per_tensor: 64, floor: 1e-4, seed: 0, prefixes: Vec::new() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
    /// (parameter, worst relative error in it)
    pub per_param: Vec<(String, f64)>,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares the gradients returned by `loss` against central differences
/// on a sample of coordinates of every (selected) parameter. Coordinates with
/// a nonzero analytic gradient are sampled first.
pub fn grad_check<F>(params: &ParamStore, loss: F, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore) -> Result<(f64, Grads)>,
{
    let (base, grads) = loss(params)?;
    if !base.is_finite() {
        return Err(Error::NonFinite("loss at the unperturbed point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut work = params.clone();
    let mut report = GradCheckReport::default();
    let ids: Vec<_> = params
        .iter()
        .filter(|(_, p)| cfg.prefixes.is_empty() || cfg.prefixes.iter().any(|pre| p.name.starts_with(pre.as_str())))
        .map(|(id, _)| id)
        .collect();
    for id in ids {
        let analytic = grads.dense(id, params);
        let (mut nonzero, mut zero): (Vec<usize>, Vec<usize>) = (0..analytic.len()).partition(|&i| analytic[i] != 0.0);
        nonzero.shuffle(&mut rng);
        zero.shuffle(&mut rng);
        let coords: Vec<usize> = nonzero.into_iter().chain(zero).take(cfg.coords_per_tensor).collect();
        let mut worst = 0.0f64;
        for i in coords {
            let x = work.get(id).value[i];
            work.get_mut(id).value[i] = x + cfg.eps;
            let up = loss(&work)?.0;
            work.get_mut(id).value[i] = x - cfg.eps;
            let down = loss(&work)?.0;
            work.get_mut(id).value[i] = x;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFinite(format!("loss while perturbing {}[{i}]", params.get(id).name)));
            }
            let numeric = (up - down) / (2.0 * cfg.eps);
            let err = relative_error(analytic[i], numeric, cfg.floor);
            report.checked += 1;
            worst = worst.max(err);
            if report.checked == 1 || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = params.get(id).name.clone();
                report.worst_index = i;
            }
        }
        report.per_param.push((params.get(id).name.clone(), worst));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::Init;
    use crate::nn::tape::Tape;

    fn quadratic_store() -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = ParamStore::new();
        s.add("p", 10, 10, Init::Uniform(1.0), &mut rng).unwrap();
        s
    }

    fn quadratic(s: &ParamStore) -> Result<(f64, Grads)> {
        let id = s.id("p").unwrap();
        let mut t = Tape::new(s);
        let p = t.param(id);
        let sq = t.dot(p, p);
        Ok((t.scalar(sq), t.backward(sq)))
    }

    #[test]
    fn quadratic_matches_exactly() {
        let s = quadratic_store();
        let r = grad_check(&s, quadratic, &GradCheckConfig::default()).unwrap();
        assert_eq!(r.checked, 64);
        assert!(r.max_rel_error < 1e-8, "{}", r.max_rel_error);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let s = quadratic_store();
        let corrupt = |s: &ParamStore| {
            let (v, mut g) = quadratic(s)?;
            g.scale(1.1);
            Ok((v, g))
        };
        let r = grad_check(&s, corrupt, &GradCheckConfig::default()).unwrap();
        assert!(r.max_rel_error > 1e-2);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let s = quadratic_store();
        let r = grad_check(&s, |_| Ok((f64::NAN, Grads::new())), &GradCheckConfig::default());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
