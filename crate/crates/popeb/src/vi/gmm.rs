//! Mean-field variational inference for a diagonal-covariance Gaussian
//! mixture with Dirichlet proportions and per-dimension Gaussian-Gamma
//! component parameters.
//!
//! Resample weights enter only through the global sufficient statistics;
//! responsibilities are always computed for the full dataset. Global
//! statistics accumulate sequentially in observation order, so results do
//! not depend on thread count.

use rand::Rng;

use crate::bootstrap::CandidateWeights;
use crate::data::VectorData;
use crate::error::{Error, Result};
use crate::math::{digamma, ln_gamma, log_sum_exp};
use crate::par;

const LN_2PI: f64 = 1.8378770664093453;

/// Prior for the mixture: symmetric Dirichlet concentration and a shared
/// per-dimension Gaussian-Gamma prior `(mean, kappa, shape, rate)` on every
/// component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmPrior {
    k: usize,
    dir_alpha: f64,
    mean: f64,
    kappa: f64,
    shape: f64,
    rate: f64,
}

impl GmmPrior {
    pub fn new(
        k: usize,
        dir_alpha: f64,
        mean: f64,
        kappa: f64,
        shape: f64,
        rate: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("component count must be at least 1"));
        }
        if dir_alpha <= 0.0 || kappa <= 0.0 || shape <= 0.0 || rate <= 0.0 {
            return Err(Error::invalid(
                "GMM prior hyperparameters must be positive",
            ));
        }
        Ok(GmmPrior {
            k,
            dir_alpha,
            mean,
            kappa,
            shape,
            rate,
        })
    }

    /// Standardized-data defaults: Dirichlet `1/K`, zero prior mean, unit
    /// prior precision scale (`kappa = shape = rate = 1`).
    pub fn default_for(k: usize) -> Result<Self> {
        GmmPrior::new(k, 1.0 / k as f64, 0.0, 1.0, 1.0, 1.0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dir_alpha(&self) -> f64 {
        self.dir_alpha
    }
}

/// Global variational parameters: Dirichlet counts plus `(m, kappa, shape,
/// rate)` per component and dimension, each flattened row-major `K x D`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmGlobals {
    k: usize,
    d: usize,
    dir: Vec<f64>,
    mean: Vec<f64>,
    kappa: Vec<f64>,
    shape: Vec<f64>,
    rate: Vec<f64>,
}

impl GmmGlobals {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dirichlet(&self) -> &[f64] {
        &self.dir
    }

    /// Normalized Dirichlet counts.
    pub fn mixture_weights(&self) -> Vec<f64> {
        let total: f64 = self.dir.iter().sum();
        self.dir.iter().map(|&a| a / total).collect()
    }

    fn idx(&self, k: usize, d: usize) -> usize {
        k * self.d + d
    }

    /// Flattens to the natural exponential-family coordinates in which the
    /// coordinate-ascent update equals a unit natural-gradient step:
    /// Dirichlet counts, then `kappa*m`, `kappa`, `shape`, `rate + kappa*m²/2`.
    pub fn to_natural(&self) -> Vec<f64> {
        let kd = self.k * self.d;
        let mut out = Vec::with_capacity(self.k + 4 * kd);
        out.extend_from_slice(&self.dir);
        out.extend(self.kappa.iter().zip(&self.mean).map(|(&k, &m)| k * m));
        out.extend_from_slice(&self.kappa);
        out.extend_from_slice(&self.shape);
        out.extend(
            self.rate
                .iter()
                .zip(&self.kappa)
                .zip(&self.mean)
                .map(|((&b, &k), &m)| b + 0.5 * k * m * m),
        );
        out
    }

    /// Inverse of [`to_natural`]. Fails if the coordinates left the valid
    /// parameter region (they cannot under convex combination, but a bad
    /// step size or caller-supplied vector can put them there).
    pub fn from_natural(k: usize, d: usize, nat: &[f64]) -> Result<Self> {
        let kd = k * d;
        if nat.len() != k + 4 * kd {
            return Err(Error::invalid(format!(
                "natural vector length {} does not match K={k}, D={d}",
                nat.len()
            )));
        }
        let dir = nat[..k].to_vec();
        let t1 = &nat[k..k + kd];
        let kappa = nat[k + kd..k + 2 * kd].to_vec();
        let shape = nat[k + 2 * kd..k + 3 * kd].to_vec();
        let t4 = &nat[k + 3 * kd..];
        if dir.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::numeric(None, "dirichlet count not positive"));
        }
        if kappa.iter().any(|&x| !(x > 0.0)) || shape.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::numeric(None, "kappa or shape not positive"));
        }
        let mean: Vec<f64> = t1.iter().zip(&kappa).map(|(&t, &k)| t / k).collect();
        let rate: Vec<f64> = t4
            .iter()
            .zip(&kappa)
            .zip(&mean)
            .map(|((&t, &k), &m)| t - 0.5 * k * m * m)
            .collect();
        if rate.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::numeric(None, "rate not positive"));
        }
        Ok(GmmGlobals {
            k,
            d,
            dir,
            mean,
            kappa,
            shape,
            rate,
        })
    }

    /// Swaps component labels according to `perm` (new index -> old index).
    #[cfg(test)]
    pub(crate) fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for (new_k, &old_k) in perm.iter().enumerate() {
            out.dir[new_k] = self.dir[old_k];
            for d in 0..self.d {
                out.mean[new_k * self.d + d] = self.mean[old_k * self.d + d];
                out.kappa[new_k * self.d + d] = self.kappa[old_k * self.d + d];
                out.shape[new_k * self.d + d] = self.shape[old_k * self.d + d];
                out.rate[new_k * self.d + d] = self.rate[old_k * self.d + d];
            }
        }
        out
    }
}

/// Variational state: `n x K` responsibilities plus the globals.
#[derive(Debug, Clone)]
pub struct GmmState {
    pub resp: Vec<f64>,
    pub globals: GmmGlobals,
}

struct LocalTables {
    // per k: E[ln pi_k] + 0.5 sum_d E[ln tau] - 0.5 sum_d 1/kappa
    base: Vec<f64>,
    // per (k,d): E[tau] and the location
    etau: Vec<f64>,
    loc: Vec<f64>,
}

fn local_tables(g: &GmmGlobals) -> LocalTables {
    let dir_total: f64 = g.dir.iter().sum();
    let psi_total = digamma(dir_total);
    let mut base = Vec::with_capacity(g.k);
    let mut etau = Vec::with_capacity(g.k * g.d);
    for k in 0..g.k {
        let mut acc = digamma(g.dir[k]) - psi_total;
        for d in 0..g.d {
            let i = g.idx(k, d);
            acc += 0.5 * (digamma(g.shape[i]) - g.rate[i].ln()) - 0.5 / g.kappa[i];
            etau.push(g.shape[i] / g.rate[i]);
        }
        base.push(acc);
    }
    LocalTables {
        base,
        etau,
        loc: g.mean.clone(),
    }
}

/// One local coordinate update: responsibilities for every observation.
///
/// `r_nk ∝ exp(E[ln π_k] + Σ_d ½E[ln τ_kd] − ½E[τ_kd](x_nd − m_kd)² − ½/κ_kd)`,
/// rows normalized in log space.
pub fn gmm_local_step(data: &VectorData, globals: &GmmGlobals) -> Result<Vec<f64>> {
    if data.dim() != globals.d {
        return Err(Error::invalid(format!(
            "data dimension {} does not match state dimension {}",
            data.dim(),
            globals.d
        )));
    }
    let k = globals.k;
    let d = globals.d;
    let tables = local_tables(globals);
    let rows: Vec<Result<Vec<f64>>> = par::map_indexed(data.len(), |n| {
        let x = data.row(n);
        let mut row = vec![0.0; k];
        for kk in 0..k {
            let mut quad = 0.0;
            for dd in 0..d {
                let i = kk * d + dd;
                let diff = x[dd] - tables.loc[i];
                quad += tables.etau[i] * diff * diff;
            }
            let v = tables.base[kk] - 0.5 * quad;
            if !v.is_finite() {
                return Err(Error::numeric(
                    None,
                    format!("non-finite responsibility exponent at observation {n}, component {kk}"),
                ));
            }
            row[kk] = v;
        }
        let norm = log_sum_exp(&row).expect("K >= 1");
        for v in &mut row {
            *v = (*v - norm).exp();
        }
        Ok(row)
    });
    let mut resp = Vec::with_capacity(data.len() * k);
    for row in rows {
        resp.extend(row?);
    }
    Ok(resp)
}

/// One global coordinate update from weighted sufficient statistics
/// `N_k = Σ c_n r_nk`, `s1 = Σ c_n r_nk x`, `s2 = Σ c_n r_nk x²`.
pub fn gmm_global_step(
    data: &VectorData,
    weights: &CandidateWeights,
    resp: &[f64],
    prior: &GmmPrior,
) -> GmmGlobals {
    let k = prior.k;
    let d = data.dim();
    let n = data.len();
    debug_assert_eq!(weights.len(), n);
    debug_assert_eq!(resp.len(), n * k);

    let mut nk = vec![0.0; k];
    let mut s1 = vec![0.0; k * d];
    let mut s2 = vec![0.0; k * d];
    for (i, c) in weights.iter_nonzero() {
        let c = c as f64;
        let x = data.row(i);
        let r = &resp[i * k..(i + 1) * k];
        for kk in 0..k {
            let w = c * r[kk];
            if w == 0.0 {
                continue;
            }
            nk[kk] += w;
            let (s1k, s2k) = (&mut s1[kk * d..(kk + 1) * d], &mut s2[kk * d..(kk + 1) * d]);
            for dd in 0..d {
                s1k[dd] += w * x[dd];
                s2k[dd] += w * x[dd] * x[dd];
            }
        }
    }

    let mut dir = Vec::with_capacity(k);
    let mut mean = vec![0.0; k * d];
    let mut kappa = vec![0.0; k * d];
    let mut shape = vec![0.0; k * d];
    let mut rate = vec![0.0; k * d];
    for kk in 0..k {
        dir.push(prior.dir_alpha + nk[kk]);
        for dd in 0..d {
            let i = kk * d + dd;
            let kap = prior.kappa + nk[kk];
            let m = (prior.kappa * prior.mean + s1[i]) / kap;
            kappa[i] = kap;
            mean[i] = m;
            shape[i] = prior.shape + 0.5 * nk[kk];
            // algebraically equal to the textbook form but exact at N_k = 0
            rate[i] = prior.rate
                + 0.5 * (s2[i] + prior.kappa * prior.mean * prior.mean - kap * m * m);
        }
    }
    GmmGlobals {
        k,
        d,
        dir,
        mean,
        kappa,
        shape,
        rate,
    }
}

/// Exact ELBO of the weighted dataset: every per-observation term carries
/// its resample count.
pub fn gmm_elbo(
    data: &VectorData,
    weights: &CandidateWeights,
    state: &GmmState,
    prior: &GmmPrior,
) -> f64 {
    let g = &state.globals;
    let (k, d) = (g.k, g.d);
    let dir_total: f64 = g.dir.iter().sum();
    let psi_total = digamma(dir_total);
    let elnpi: Vec<f64> = g.dir.iter().map(|&a| digamma(a) - psi_total).collect();

    // per k: 0.5 sum_d (E ln tau - ln 2pi) - 0.5 sum_d 1/kappa
    let mut base = vec![0.0; k];
    let mut etau = vec![0.0; k * d];
    for kk in 0..k {
        for dd in 0..d {
            let i = kk * d + dd;
            base[kk] += 0.5 * (digamma(g.shape[i]) - g.rate[i].ln() - LN_2PI) - 0.5 / g.kappa[i];
            etau[i] = g.shape[i] / g.rate[i];
        }
    }

    let per_row: Vec<f64> = par::map_indexed(data.len(), |n| {
        let c = weights.count(n) as f64;
        if c == 0.0 {
            return 0.0;
        }
        let x = data.row(n);
        let r = &state.resp[n * k..(n + 1) * k];
        let mut acc = 0.0;
        for kk in 0..k {
            if r[kk] <= 0.0 {
                continue;
            }
            let mut quad = 0.0;
            for dd in 0..d {
                let i = kk * d + dd;
                let diff = x[dd] - g.mean[i];
                quad += etau[i] * diff * diff;
            }
            acc += r[kk] * (elnpi[kk] + base[kk] - 0.5 * quad - r[kk].ln());
        }
        c * acc
    });
    let mut elbo: f64 = per_row.iter().sum();

    // Dirichlet prior minus entropy of q(pi)
    let a0 = prior.dir_alpha;
    elbo += ln_gamma(k as f64 * a0) - k as f64 * ln_gamma(a0);
    elbo -= ln_gamma(dir_total);
    for kk in 0..k {
        elbo += (a0 - 1.0) * elnpi[kk];
        elbo += ln_gamma(g.dir[kk]) - (g.dir[kk] - 1.0) * elnpi[kk];
    }

    // Gaussian-Gamma prior minus entropy of q(mu, tau) per (k, d)
    for kk in 0..k {
        for dd in 0..d {
            let i = kk * d + dd;
            let (m, kap, a, b) = (g.mean[i], g.kappa[i], g.shape[i], g.rate[i]);
            let elntau = digamma(a) - b.ln();
            let et = a / b;
            let e_p = 0.5 * (prior.kappa.ln() - LN_2PI) + 0.5 * elntau
                - 0.5 * prior.kappa * (1.0 / kap + et * (m - prior.mean) * (m - prior.mean))
                + prior.shape * prior.rate.ln()
                - ln_gamma(prior.shape)
                + (prior.shape - 1.0) * elntau
                - prior.rate * et;
            let e_q = 0.5 * (kap.ln() - LN_2PI) + 0.5 * elntau - 0.5 + a * b.ln()
                - ln_gamma(a)
                + (a - 1.0) * elntau
                - a;
            elbo += e_p - e_q;
        }
    }
    elbo
}

/// Precomputed Student-t mixture for the variational predictive density:
/// the exact integral of the Gaussian likelihood against each Gaussian-Gamma
/// factor, mixed by normalized Dirichlet counts.
pub struct GmmPredictive {
    k: usize,
    d: usize,
    ln_pi: Vec<f64>,
    loc: Vec<f64>,
    ln_norm: Vec<f64>,
    half_nu_p1: Vec<f64>,
    inv_nu_scale2: Vec<f64>,
}

impl GmmPredictive {
    pub fn new(globals: &GmmGlobals) -> Self {
        let (k, d) = (globals.k, globals.d);
        let total: f64 = globals.dir.iter().sum();
        let ln_pi = globals.dir.iter().map(|&a| (a / total).ln()).collect();
        let kd = k * d;
        let mut loc = Vec::with_capacity(kd);
        let mut ln_norm = Vec::with_capacity(kd);
        let mut half_nu_p1 = Vec::with_capacity(kd);
        let mut inv_nu_scale2 = Vec::with_capacity(kd);
        for i in 0..kd {
            let (m, kap, a, b) = (
                globals.mean[i],
                globals.kappa[i],
                globals.shape[i],
                globals.rate[i],
            );
            let nu = 2.0 * a;
            let scale2 = b * (1.0 + kap) / (a * kap);
            loc.push(m);
            ln_norm.push(
                ln_gamma((nu + 1.0) / 2.0)
                    - ln_gamma(nu / 2.0)
                    - 0.5 * (nu * std::f64::consts::PI * scale2).ln(),
            );
            half_nu_p1.push((nu + 1.0) / 2.0);
            inv_nu_scale2.push(1.0 / (nu * scale2));
        }
        GmmPredictive {
            k,
            d,
            ln_pi,
            loc,
            ln_norm,
            half_nu_p1,
            inv_nu_scale2,
        }
    }

    /// Log predictive density of one observation.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let mut comp = vec![0.0; self.k];
        for kk in 0..self.k {
            let mut acc = self.ln_pi[kk];
            for dd in 0..self.d {
                let i = kk * self.d + dd;
                let diff = x[dd] - self.loc[i];
                acc += self.ln_norm[i]
                    - self.half_nu_p1[i] * (diff * diff * self.inv_nu_scale2[i]).ln_1p();
            }
            comp[kk] = acc;
        }
        log_sum_exp(&comp).expect("K >= 1")
    }
}

/// Log predictive density of `x` under the variational posterior.
pub fn gmm_log_predictive(globals: &GmmGlobals, x: &[f64]) -> f64 {
    GmmPredictive::new(globals).log_density(x)
}

/// Mean log predictive over a dataset; rows evaluate in parallel and sum in
/// index order.
pub fn gmm_dataset_log_predictive(globals: &GmmGlobals, data: &VectorData) -> f64 {
    let table = GmmPredictive::new(globals);
    par::map_indexed(data.len(), |n| table.log_density(data.row(n)))
        .iter()
        .sum()
}

/// Seeded soft initialization: greedy k-means++-style center choice, nearest
/// assignment, responsibilities softened to 0.9 / 0.1, one global update.
pub fn gmm_init<R: Rng>(data: &VectorData, prior: &GmmPrior, rng: &mut R) -> Result<GmmState> {
    let n = data.len();
    let k = prior.k;
    if n < k {
        return Err(Error::invalid(format!(
            "cannot initialize {k} components from {n} observations"
        )));
    }
    let mut centers: Vec<usize> = Vec::with_capacity(k);
    centers.push(rng.gen_range(0..n));
    let sq_dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum()
    };
    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(data.row(i), data.row(centers[0])))
        .collect();
    while centers.len() < k {
        let total: f64 = min_d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in min_d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // all remaining points coincide with a center
            rng.gen_range(0..n)
        };
        centers.push(next);
        for i in 0..n {
            let d2 = sq_dist(data.row(i), data.row(next));
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
        }
    }

    let soft_owner = 0.9;
    let soft_other = if k > 1 { 0.1 / (k - 1) as f64 } else { 0.0 };
    let mut resp = vec![0.0; n * k];
    for i in 0..n {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (kk, &c) in centers.iter().enumerate() {
            let d2 = sq_dist(data.row(i), data.row(c));
            if d2 < best_d2 {
                best_d2 = d2;
                best = kk;
            }
        }
        for kk in 0..k {
            resp[i * k + kk] = if k == 1 {
                1.0
            } else if kk == best {
                soft_owner
            } else {
                soft_other
            };
        }
    }
    let globals = gmm_global_step(data, &CandidateWeights::identity(n), &resp, prior);
    Ok(GmmState { resp, globals })
}

/// Batch coordinate ascent: alternating local and global updates until the
/// natural-parameter change drops below `tol` or `max_sweeps` is reached.
/// Returns the final state and the ELBO after every sweep.
pub fn gmm_cavi(
    data: &VectorData,
    prior: &GmmPrior,
    init: GmmState,
    max_sweeps: usize,
    tol: f64,
) -> Result<(GmmState, Vec<f64>)> {
    let identity = CandidateWeights::identity(data.len());
    let mut state = init;
    let mut elbos = Vec::new();
    let mut prev_nat = state.globals.to_natural();
    for _ in 0..max_sweeps {
        let resp = gmm_local_step(data, &state.globals)?;
        let globals = gmm_global_step(data, &identity, &resp, prior);
        state = GmmState { resp, globals };
        elbos.push(gmm_elbo(data, &identity, &state, prior));
        let nat = state.globals.to_natural();
        let delta = l2_delta(&nat, &prev_nat);
        prev_nat = nat;
        if delta < tol {
            break;
        }
    }
    Ok((state, elbos))
}

fn l2_delta(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The mixture as a bumpable model: local responsibilities, weighted global
/// fixed points, and the Student-t mixture score.
#[derive(Debug, Clone, Copy)]
pub struct GmmModel {
    prior: GmmPrior,
}

impl GmmModel {
    pub fn new(prior: GmmPrior) -> Self {
        GmmModel { prior }
    }

    pub fn prior(&self) -> &GmmPrior {
        &self.prior
    }
}

impl crate::bumpvi::BumpableModel for GmmModel {
    type Data = VectorData;
    type Locals = Vec<f64>;
    type Globals = GmmGlobals;

    fn n_obs(&self, data: &VectorData) -> usize {
        data.len()
    }

    fn local_step(&self, data: &VectorData, globals: &GmmGlobals) -> Result<Vec<f64>> {
        gmm_local_step(data, globals)
    }

    fn global_fixed_point(
        &self,
        data: &VectorData,
        weights: &CandidateWeights,
        locals: &Vec<f64>,
    ) -> GmmGlobals {
        gmm_global_step(data, weights, locals, &self.prior)
    }

    fn predictive_score(&self, data: &VectorData, globals: &GmmGlobals) -> f64 {
        gmm_dataset_log_predictive(globals, data)
    }

    fn to_natural(&self, globals: &GmmGlobals) -> Vec<f64> {
        globals.to_natural()
    }

    fn from_natural(&self, nat: &[f64]) -> Result<GmmGlobals> {
        let k = self.prior.k;
        if nat.len() <= k || (nat.len() - k) % (4 * k) != 0 {
            return Err(Error::invalid(format!(
                "natural vector length {} is not K + 4*K*D for K={k}",
                nat.len()
            )));
        }
        let d = (nat.len() - k) / (4 * k);
        GmmGlobals::from_natural(k, d, nat)
    }
}
