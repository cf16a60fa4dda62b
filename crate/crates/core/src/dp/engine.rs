use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::calibration::NullCalibration;
use super::{DpReport, DpRow, DpScenario, SimMode};
use crate::combine::{ranking_statistic, study_quotas, top_indices_into, Method, NullDist};
use crate::error::{Error, Result};
use crate::genmodel::var_single_study;
use crate::statdist::{stream_id, RngStream};

/// Stream lanes within one replicate: 0 draws disease SNPs, `1 + s` the
/// null statistics of study `s`, `FAST_LANE + k` the binomial counts of
/// fast mode, `FAST_LANE - 1` its per-study counts and `FAST_LANE - 2` its
/// list union sizes.
const DISEASE_LANE: u16 = 0;
const FAST_LANE: u16 = 0xF000;

/// Selections made in one replicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicateOutcome {
    /// `selected[k][t][i]`: whether disease SNP `i` is selected by method
    /// `scenario.methods[k]` at `scenario.t_list[t]`.
    pub selected: Vec<Vec<Vec<bool>>>,
    /// T^c for each selection size; empty unless the combined list is run.
    pub union_sizes: Vec<u64>,
}

/// Per-thread working memory, reused across replicates.
#[derive(Default)]
struct Scratch {
    z: Vec<Vec<f64>>,
    walds: Vec<Vec<f64>>,
    idx: Vec<u32>,
    tops: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    generation: u32,
    b: Vec<f64>,
}

/// Disease-SNP estimates, `M × S` row-major.
struct DiseaseDraws {
    beta_hat: Vec<f64>,
    sigma_sq: Vec<f64>,
}

/// Counts, for each threshold, how many values strictly exceed it.
struct ExceedCounter {
    sorted: Vec<f64>,
    buckets: Vec<u64>,
}

impl ExceedCounter {
    fn new(thresholds: &[f64]) -> Self {
        let mut sorted = thresholds.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Self { buckets: vec![0; sorted.len() + 1], sorted }
    }

    fn min(&self) -> f64 {
        self.sorted.first().copied().unwrap_or(f64::INFINITY)
    }

    /// Records a value known not to exceed any threshold.
    #[inline]
    fn add_below(&mut self) {
        self.buckets[0] += 1;
    }

    #[inline]
    fn add(&mut self, x: f64) {
        let k = self.sorted.iter().take_while(|&&t| t < x).count();
        self.buckets[k] += 1;
    }

    fn exceed(&self, threshold: f64) -> u64 {
        let from = self.sorted.partition_point(|&t| t <= threshold);
        self.buckets[from..].iter().sum()
    }
}

/// A cheap upper bound on a null SNP's statistic, for the rules whose exact
/// value needs a special function per study.
///
/// Fisher: −2 ln P(χ²₁ > w) ≤ 2w + 3/2. Stouffer: Φ⁻¹(1 − p(w)) ≤ √w.
#[inline]
fn statistic_upper_bound(method: Method, beta_hat: &[f64], sigma_sq: &[f64]) -> Option<f64> {
    let walds = beta_hat.iter().zip(sigma_sq).map(|(b, v)| b * b / v);
    match method {
        Method::Fisher => Some(walds.map(|w| 2.0 * w + 1.5).sum()),
        Method::LiptakStouffer => Some(walds.map(f64::sqrt).sum::<f64>() / (beta_hat.len() as f64).sqrt()),
        _ => None,
    }
}

/// Disease SNPs ranked ahead of `i`: larger value, or equal with lower index.
fn ahead(values: &[f64], i: usize) -> u64 {
    values.iter().enumerate().filter(|&(j, &v)| j != i && (v > values[i] || (v == values[i] && j < i))).count() as u64
}

/// Null counts above each disease value, drawn as nested binomials so the
/// counts stay jointly consistent across disease SNPs.
fn binomial_exceedances(n_null: u64, sfs: &[f64], rng: &mut RngStream) -> Result<Vec<u64>> {
    let mut order: Vec<usize> = (0..sfs.len()).collect();
    order.sort_by(|&a, &b| sfs[a].total_cmp(&sfs[b]).then(a.cmp(&b)));
    let mut out = vec![0; sfs.len()];
    let (mut count, mut prev) = (0u64, 0.0f64);
    for i in order {
        let p = sfs[i].clamp(prev, 1.0);
        let cond = if prev >= 1.0 { 0.0 } else { ((p - prev) / (1.0 - prev)).clamp(0.0, 1.0) };
        let rest = n_null - count;
        if rest > 0 && cond > 0.0 {
            let bin = Binomial::new(rest, cond).map_err(|e| Error::domain(format!("binomial draw: {e}")))?;
            count += bin.sample(rng);
        }
        out[i] = count;
        prev = p;
    }
    Ok(out)
}

/// The simulation engine for one validated scenario.
pub struct DpEngine {
    scenario: DpScenario,
    /// `quotas[t][s]`: study `s`'s list length at `t_list[t]`.
    quotas: Vec<Vec<usize>>,
    null_sd: Vec<f64>,
    null_var: Vec<f64>,
    calibration: Option<NullCalibration>,
}

impl DpEngine {
    pub fn new(scenario: &DpScenario) -> Result<Self> {
        scenario.validate()?;
        let s = scenario.n_studies();
        let quotas = scenario.t_list.iter().map(|&t| study_quotas(t, s)).collect::<Result<Vec<_>>>()?;
        let null_var: Vec<f64> = scenario.designs.iter().map(|d| 1.0 / d.n_cases as f64).collect();
        let null_sd = null_var.iter().map(|v| v.sqrt()).collect();
        let calibration = if scenario.sim_mode == SimMode::Fast && scenario.methods.contains(&Method::MetaRandom) {
            Some(NullCalibration::new(&scenario.designs, scenario.null_calibration_draws, scenario.seed)?)
        } else {
            None
        };
        Ok(Self { scenario: scenario.clone(), quotas, null_sd, null_var, calibration })
    }

    pub fn scenario(&self) -> &DpScenario {
        &self.scenario
    }

    pub fn simulate_replicate(&self, replicate: u64) -> Result<ReplicateOutcome> {
        self.replicate_with(replicate, &mut Scratch::default())
    }

    fn draw_disease(&self, replicate: u64) -> Result<DiseaseDraws> {
        let sc = &self.scenario;
        let s = sc.n_studies();
        let mut rng = RngStream::new(sc.seed, stream_id(replicate, DISEASE_LANE));
        let mut beta_hat = Vec::with_capacity(sc.n_disease * s);
        let mut sigma_sq = Vec::with_capacity(sc.n_disease * s);
        for _ in 0..sc.n_disease {
            let eta = sc.freq_source.sample(&mut rng);
            for design in &sc.designs {
                let beta = sc.effect.draw_study_beta(&mut rng);
                let var = var_single_study(design, eta, beta)?;
                beta_hat.push(beta + var.sqrt() * rng.normal());
                sigma_sq.push(var);
            }
        }
        Ok(DiseaseDraws { beta_hat, sigma_sq })
    }

    fn null_reference(&self, method: Method) -> NullDist {
        let s = self.scenario.n_studies() as u32;
        match method {
            Method::CombinedList | Method::MetaFixed | Method::MetaRandom => NullDist::ChiSquare { df: 1 },
            Method::SumWald => NullDist::ChiSquare { df: s },
            Method::Fisher => NullDist::ChiSquare { df: 2 * s },
            Method::LiptakStouffer => NullDist::StandardNormalUpper,
        }
    }

    fn null_sf(&self, method: Method, x: f64) -> f64 {
        match (method, &self.calibration) {
            (Method::MetaRandom, Some(cal)) => cal.sf(x),
            _ => self.null_reference(method).sf(x),
        }
    }

    fn replicate_with(&self, replicate: u64, scratch: &mut Scratch) -> Result<ReplicateOutcome> {
        let sc = &self.scenario;
        let (m, s) = (sc.n_disease, sc.n_studies());
        let draws = self.draw_disease(replicate)?;
        let row = |i: usize| i * s..(i + 1) * s;

        let combined: Vec<Method> = sc.methods.iter().copied().filter(|&k| k != Method::CombinedList).collect();
        let disease_stats: Vec<Vec<f64>> = combined
            .iter()
            .map(|&k| (0..m).map(|i| ranking_statistic(k, &draws.beta_hat[row(i)], &draws.sigma_sq[row(i)])).collect())
            .collect();
        let run_list = sc.methods.contains(&Method::CombinedList);
        // disease_walds[s][i]
        let disease_walds: Vec<Vec<f64>> = (0..s)
            .map(|st| {
                (0..m)
                    .map(|i| {
                        let (b, v) = (draws.beta_hat[i * s + st], draws.sigma_sq[i * s + st]);
                        b * b / v
                    })
                    .collect()
            })
            .collect();

        let (method_exceed, study_exceed, union_sizes) = match sc.sim_mode {
            SimMode::Full => self.full_counts(replicate, &combined, &disease_stats, run_list, &disease_walds, scratch),
            SimMode::Fast => self.fast_counts(replicate, &combined, &disease_stats, run_list, &disease_walds)?,
        };

        let n_t = sc.t_list.len();
        let mut selected: Vec<Vec<Vec<bool>>> = Vec::with_capacity(sc.methods.len());
        for &method in &sc.methods {
            if method == Method::CombinedList {
                // rank within each study, then any-study membership
                let ranks: Vec<Vec<u64>> = (0..s)
                    .map(|st| (0..m).map(|i| study_exceed[st][i] + ahead(&disease_walds[st], i)).collect())
                    .collect();
                let per_t: Vec<Vec<bool>> = (0..n_t)
                    .map(|t| (0..m).map(|i| (0..s).any(|st| ranks[st][i] < self.quotas[t][st] as u64)).collect())
                    .collect();
                selected.push(per_t);
            } else {
                let k = combined.iter().position(|&c| c == method).expect("method present");
                let ranks: Vec<u64> = (0..m).map(|i| method_exceed[k][i] + ahead(&disease_stats[k], i)).collect();
                let per_t: Vec<Vec<bool>> =
                    sc.t_list.iter().map(|&t| ranks.iter().map(|&r| r < t as u64).collect()).collect();
                selected.push(per_t);
            }
        }
        let union_sizes = if run_list {
            match union_sizes {
                Some(u) => u,
                None => {
                    let k = sc.methods.iter().position(|&k| k == Method::CombinedList).expect("list present");
                    self.sampled_union(replicate, &selected[k], &study_exceed, &disease_walds)?
                }
            }
        } else {
            Vec::new()
        };
        Ok(ReplicateOutcome { selected, union_sizes })
    }

    /// Fast-mode T^c. Each study's null picks are a uniformly random subset
    /// of the null SNPs, independent across studies, so the null part of the
    /// union grows by `picks − overlap` per study, with the hypergeometric
    /// overlap drawn as Binomial(picks, union / N₀) (same mean; picks ≪ N₀).
    /// Distinct disease picks are added on top.
    fn sampled_union(
        &self,
        replicate: u64,
        list_selected: &[Vec<bool>],
        study_exceed: &[Vec<u64>],
        disease_walds: &[Vec<f64>],
    ) -> Result<Vec<u64>> {
        let sc = &self.scenario;
        let (s, m) = (sc.n_studies(), sc.n_disease);
        let n_null = (sc.n_snps - m) as u64;
        let mut rng = RngStream::new(sc.seed, stream_id(replicate, FAST_LANE - 2));
        (0..sc.t_list.len())
            .map(|t| {
                let mut union = 0u64;
                for st in 0..s {
                    let q = self.quotas[t][st] as u64;
                    let disease_picks =
                        (0..m).filter(|&i| study_exceed[st][i] + ahead(&disease_walds[st], i) < q).count() as u64;
                    let picks = q - disease_picks;
                    let overlap = if union == 0 || picks == 0 {
                        0
                    } else {
                        Binomial::new(picks, (union as f64 / n_null as f64).min(1.0))
                            .map_err(|e| Error::domain(format!("overlap draw: {e}")))?
                            .sample(&mut rng)
                    };
                    union += picks - overlap;
                }
                Ok(union + list_selected[t].iter().filter(|&&x| x).count() as u64)
            })
            .collect()
    }

    #[allow(clippy::type_complexity)]
    fn fast_counts(
        &self,
        replicate: u64,
        combined: &[Method],
        disease_stats: &[Vec<f64>],
        run_list: bool,
        disease_walds: &[Vec<f64>],
    ) -> Result<(Vec<Vec<u64>>, Vec<Vec<u64>>, Option<Vec<u64>>)> {
        let sc = &self.scenario;
        let n_null = (sc.n_snps - sc.n_disease) as u64;
        let mut method_exceed = Vec::with_capacity(combined.len());
        for (&method, stats) in combined.iter().zip(disease_stats) {
            let lane = FAST_LANE + Method::ALL.iter().position(|&k| k == method).unwrap() as u16;
            let mut rng = RngStream::new(sc.seed, stream_id(replicate, lane));
            let sfs: Vec<f64> = stats.iter().map(|&x| self.null_sf(method, x)).collect();
            method_exceed.push(binomial_exceedances(n_null, &sfs, &mut rng)?);
        }
        let mut study_exceed = Vec::new();
        if run_list {
            let mut rng = RngStream::new(sc.seed, stream_id(replicate, FAST_LANE - 1));
            for walds in disease_walds {
                let sfs: Vec<f64> = walds.iter().map(|&w| NullDist::ChiSquare { df: 1 }.sf(w)).collect();
                study_exceed.push(binomial_exceedances(n_null, &sfs, &mut rng)?);
            }
        }
        Ok((method_exceed, study_exceed, None))
    }

    #[allow(clippy::type_complexity, clippy::needless_range_loop)]
    fn full_counts(
        &self,
        replicate: u64,
        combined: &[Method],
        disease_stats: &[Vec<f64>],
        run_list: bool,
        disease_walds: &[Vec<f64>],
        scratch: &mut Scratch,
    ) -> (Vec<Vec<u64>>, Vec<Vec<u64>>, Option<Vec<u64>>) {
        let sc = &self.scenario;
        let (m, s, n) = (sc.n_disease, sc.n_studies(), sc.n_snps);
        let n_null = n - m;
        scratch.z.resize_with(s, Vec::new);
        for (st, z) in scratch.z.iter_mut().enumerate() {
            z.resize(n_null, 0.0);
            RngStream::new(sc.seed, stream_id(replicate, 1 + st as u16)).fill_normal(z);
        }

        let mut counters: Vec<ExceedCounter> = disease_stats.iter().map(|d| ExceedCounter::new(d)).collect();
        if !combined.is_empty() {
            scratch.b.resize(s, 0.0);
            for j in 0..n_null {
                for st in 0..s {
                    scratch.b[st] = scratch.z[st][j] * self.null_sd[st];
                }
                for (counter, &method) in counters.iter_mut().zip(combined) {
                    match statistic_upper_bound(method, &scratch.b, &self.null_var) {
                        Some(ub) if ub <= counter.min() => counter.add_below(),
                        _ => counter.add(ranking_statistic(method, &scratch.b, &self.null_var)),
                    }
                }
            }
        }
        let method_exceed =
            counters.iter().zip(disease_stats).map(|(c, d)| d.iter().map(|&x| c.exceed(x)).collect()).collect();

        if !run_list {
            return (method_exceed, Vec::new(), None);
        }
        let n_t = sc.t_list.len();
        let t_max = (0..n_t).max_by_key(|&t| sc.t_list[t]).unwrap();
        scratch.walds.resize_with(s, Vec::new);
        scratch.tops.resize_with(s, Vec::new);
        let mut study_exceed = Vec::with_capacity(s);
        for st in 0..s {
            let walds = &mut scratch.walds[st];
            walds.clear();
            walds.extend_from_slice(&disease_walds[st]);
            let (sd, var) = (self.null_sd[st], self.null_var[st]);
            walds.extend(scratch.z[st].iter().map(|&z| {
                let b = z * sd;
                b * b / var
            }));
            let mut counter = ExceedCounter::new(&disease_walds[st]);
            for &w in &walds[m..] {
                counter.add(w);
            }
            study_exceed.push(disease_walds[st].iter().map(|&w| counter.exceed(w)).collect());
            top_indices_into(walds, self.quotas[t_max][st], &mut scratch.idx, &mut scratch.tops[st]);
        }

        scratch.stamp.resize(n, 0);
        let mut unions = Vec::with_capacity(n_t);
        for t in 0..n_t {
            if scratch.generation == u32::MAX {
                scratch.stamp.iter_mut().for_each(|v| *v = 0);
                scratch.generation = 0;
            }
            scratch.generation += 1;
            let g = scratch.generation;
            let mut count = 0u64;
            for st in 0..s {
                for &j in &scratch.tops[st][..self.quotas[t][st]] {
                    let slot = &mut scratch.stamp[j as usize];
                    if *slot != g {
                        *slot = g;
                        count += 1;
                    }
                }
            }
            unions.push(count);
        }
        (method_exceed, study_exceed, Some(unions))
    }

    /// All replicates, aggregated in replicate order.
    pub fn run(&self) -> Result<DpReport> {
        let sc = &self.scenario;
        let outcomes: Vec<ReplicateOutcome> = (0..sc.nsim)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, r| self.replicate_with(r, scratch))
            .collect::<Result<_>>()?;
        Ok(self.aggregate(&outcomes))
    }

    fn aggregate(&self, outcomes: &[ReplicateOutcome]) -> DpReport {
        let sc = &self.scenario;
        let m = sc.n_disease as f64;
        let nsim = outcomes.len() as f64;
        let mut rows = Vec::new();
        for (k, &method) in sc.methods.iter().enumerate() {
            for (ti, &t) in sc.t_list.iter().enumerate() {
                let per_rep = |o: &ReplicateOutcome| o.selected[k][ti].iter().filter(|&&x| x).count() as u64;
                let hits: u64 = outcomes.iter().map(per_rep).sum();
                let dp = hits as f64 / (nsim * m);
                let mc_se = (dp * (1.0 - dp) / (nsim * m)).sqrt();
                let (pp, avg_tc) = if method == Method::CombinedList {
                    let pp = outcomes.iter().map(|o| per_rep(o) as f64 / o.union_sizes[ti] as f64).sum::<f64>() / nsim;
                    let tc = outcomes.iter().map(|o| o.union_sizes[ti]).sum::<u64>() as f64 / nsim;
                    (pp, Some(tc))
                } else {
                    (dp * m / t as f64, None)
                };
                rows.push(DpRow { method, t, dp, pp, avg_tc, mc_se, hits });
            }
        }
        DpReport { nsim: sc.nsim, n_disease: sc.n_disease, n_snps: sc.n_snps, rows }
    }
}

/// One replicate of `scenario`. Builds a fresh engine, so repeated calls
/// should go through [`DpEngine`] instead.
pub fn simulate_replicate(scenario: &DpScenario, replicate: u64) -> Result<ReplicateOutcome> {
    DpEngine::new(scenario)?.simulate_replicate(replicate)
}

pub fn run_dp(scenario: &DpScenario) -> Result<DpReport> {
    DpEngine::new(scenario)?.run()
}
