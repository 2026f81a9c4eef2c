//! Search for positive, negative, and sign-changing critical points of the
//! penalized energy.
//!
//! Small seeds descend into the trivial well, so nontrivial critical points
//! are located on basin boundaries: along a seed ray the amplitude is
//! bisected between "falls back to the trivial well" and "escapes", and the
//! boundary trajectory is driven to the critical point guarding the escape.
//! The sign-changing search additionally bisects the seed angle inside the
//! spectral plane spanned by the first two eigenfields. Every returned
//! solution is certified a posteriori by its fixed-point residual and the
//! H¹ norms of its sign parts, so correctness never rests on the search
//! heuristics.

use crate::error::{Error, Result};
use crate::flow::{
    classify, flow_to_critical, Classification, CriticalPointReport, FlowParams,
    TerminationReason,
};
use crate::grid::{h1_norm, Field, Grid};
use crate::penalty::{orthonormalize_h1, PenaltyProblem};
use rayon::prelude::*;
use serde::Serialize;

/// Parameters of the three-solution search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    /// Seed amplitude for the cone rays (`t0 * φ̂1`).
    pub t0: f64,
    /// Radius of the angle-mesh seeds in the spectral plane.
    pub r_seed: f64,
    /// Ball radius used for the spectral-plane hypothesis and energy bound.
    pub r1: f64,
    /// Number of angle-mesh seeds in `[0, 2π)`.
    pub angle_count: usize,
    /// Bisection depth limit (at most 60).
    pub bisect_depth: usize,
    /// Classification tolerance on the part norms.
    pub part_tol: f64,
    /// Endpoints with H¹ norm below this are deemed trivial.
    pub rho0: f64,
    /// Flow parameters for full-accuracy runs.
    pub flow: FlowParams,
    /// Step cap for exploratory probes (bisection midpoints, angle mesh).
    pub probe_max_steps: usize,
    /// Optional looser tolerance for the sign-changing branch.
    pub sc_tol: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            t0: 0.1,
            r_seed: 1.0,
            r1: 1.0,
            angle_count: 16,
            bisect_depth: 50,
            part_tol: 1e-3,
            rho0: 1e-2,
            flow: FlowParams::default(),
            probe_max_steps: 5000,
            sc_tol: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 >= 0.0) || !(self.r_seed > 0.0) || !(self.r1 > 0.0) {
            return Err(Error::contract("search amplitudes must be positive"));
        }
        if self.bisect_depth > 60 {
            return Err(Error::contract(format!(
                "bisection depth must be <= 60, got {}",
                self.bisect_depth
            )));
        }
        if self.angle_count < 4 {
            return Err(Error::contract("angle_count must be at least 4"));
        }
        if !(self.part_tol > 0.0) || !(self.rho0 > 0.0) {
            return Err(Error::contract("part_tol and rho0 must be positive"));
        }
        self.flow.validate_public()
    }

    fn probe_params(&self) -> FlowParams {
        FlowParams {
            max_steps: self.probe_max_steps,
            ..self.flow.clone()
        }
    }

    fn sc_flow(&self) -> FlowParams {
        FlowParams {
            tol: self.sc_tol.unwrap_or(self.flow.tol),
            ..self.flow.clone()
        }
    }
}

impl FlowParams {
    pub(crate) fn validate_public(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::contract("flow tol must be positive"));
        }
        Ok(())
    }
}

/// One slot of the triple report.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSlot {
    pub found: bool,
    pub classification: Classification,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: TerminationReason,
    pub part_norm_plus: f64,
    pub part_norm_minus: f64,
    pub field_file: Option<String>,
    pub not_found_reason: Option<String>,
    #[serde(skip)]
    pub field: Field,
}

impl SolutionSlot {
    fn from_report(
        grid: &Grid,
        report: CriticalPointReport,
        found: bool,
        reason: Option<String>,
        part_tol: f64,
    ) -> Result<Self> {
        let plus = h1_norm(grid, &report.field.pos_part())?;
        let minus = h1_norm(grid, &report.field.neg_part())?;
        let class = classify(grid, &report.field, part_tol)?;
        Ok(SolutionSlot {
            found,
            classification: class,
            energy: report.energy,
            grad_norm: report.grad_norm,
            iterations: report.iterations,
            termination: report.reason,
            part_norm_plus: plus,
            part_norm_minus: minus,
            field_file: None,
            not_found_reason: reason,
            field: report.field,
        })
    }

    fn not_found(grid: &Grid, reason: String) -> Self {
        SolutionSlot {
            found: false,
            classification: Classification::Trivial,
            energy: 0.0,
            grad_norm: f64::NAN,
            iterations: 0,
            termination: TerminationReason::MaxSteps,
            part_norm_plus: 0.0,
            part_norm_minus: 0.0,
            field_file: None,
            not_found_reason: Some(reason),
            field: Field::zeros(grid.interior_count()),
        }
    }
}

/// Basin-boundary bracket diagnostics for the sign-changing search.
#[derive(Debug, Clone, Serialize)]
pub struct BracketDiagnostics {
    pub kind: String,
    pub lo: f64,
    pub hi: f64,
    pub final_width: f64,
    pub lo_class: Classification,
    pub hi_class: Classification,
}

/// Combined report of the three searches.
#[derive(Debug, Clone, Serialize)]
pub struct TripleReport {
    pub positive: SolutionSlot,
    pub negative: SolutionSlot,
    pub sign_changing: SolutionSlot,
    pub bracket: Option<BracketDiagnostics>,
    /// Smallest pairwise H¹ distance between the found solutions.
    pub min_pairwise_distance: Option<f64>,
    pub distinctness_threshold: f64,
    pub distinct: bool,
}

// Angle components with denormal-level contamination snapped to exact zero,
// so mesh rays along a pure eigenfield stay in its symmetry class exactly.
fn angle_components(theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    (snap(c), snap(s))
}

// ---------------------------------------------------------------------------
// probe machinery

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basin {
    Lower(Classification),    // converged (or undecided) without escaping
    Escaped(Classification),  // diverged; classified by the last iterate
}

struct Probe {
    report: CriticalPointReport,
    class: Classification,
    basin: Basin,
}

fn run_probe(pp: &PenaltyProblem, seed: &Field, params: &FlowParams, part_tol: f64) -> Result<Probe> {
    let report = flow_to_critical(pp, seed, params)?;
    let class = classify(pp.grid(), &report.field, part_tol)?;
    let basin = match report.reason {
        TerminationReason::Diverged => Basin::Escaped(class),
        _ => Basin::Lower(class),
    };
    Ok(Probe { report, class, basin })
}

fn certified(
    pp: &PenaltyProblem,
    probe: &Probe,
    want: Classification,
    tol: f64,
    cfg: &SearchConfig,
) -> Result<bool> {
    if probe.report.reason != TerminationReason::Converged || probe.class != want {
        return Ok(false);
    }
    if probe.report.grad_norm > tol {
        return Ok(false);
    }
    let nrm = h1_norm(pp.grid(), &probe.report.field)?;
    if nrm < cfg.rho0 {
        return Ok(false);
    }
    if want == Classification::SignChanging {
        let plus = h1_norm(pp.grid(), &probe.report.field.pos_part())?;
        let minus = h1_norm(pp.grid(), &probe.report.field.neg_part())?;
        if plus < cfg.part_tol || minus < cfg.part_tol {
            return Ok(false);
        }
    }
    Ok(true)
}

struct RaySearch<'a> {
    pp: &'a PenaltyProblem,
    cfg: &'a SearchConfig,
    want: Classification,
    tol: f64,
}

struct RayOutcome {
    found: Option<CriticalPointReport>,
    best_candidate: Option<CriticalPointReport>,
    bracket: Option<BracketDiagnostics>,
    saw_escape: bool,
}

impl<'a> RaySearch<'a> {
    /// Bisect the seed amplitude along `dir` between the trivial well and
    /// escape; converged endpoints matching `want` are returned directly.
    fn run(&self, dir: &Field, t0: f64) -> Result<RayOutcome> {
        let cfg = self.cfg;
        let probe_params = FlowParams { tol: self.tol, ..cfg.probe_params() };
        let mut best: Option<CriticalPointReport> = None;
        let consider = |probe: Probe, best: &mut Option<CriticalPointReport>| {
            if probe.class == self.want {
                let better = match best {
                    Some(b) => probe.report.grad_norm < b.grad_norm,
                    None => true,
                };
                if better {
                    *best = Some(probe.report);
                }
            }
        };

        // Escalate / de-escalate to bracket the escape threshold.
        let mut t = t0.max(1e-12);
        let mut lo: Option<f64> = None;
        let mut hi: Option<f64> = None;
        for _ in 0..60 {
            let probe = run_probe(self.pp, &dir.scaled(t), &probe_params, cfg.part_tol)?;
            if certified(self.pp, &probe, self.want, self.tol, cfg)? {
                return Ok(RayOutcome {
                    found: Some(probe.report),
                    best_candidate: None,
                    bracket: None,
                    saw_escape: false,
                });
            }
            match probe.basin {
                Basin::Lower(_) => {
                    consider(probe, &mut best);
                    lo = Some(t);
                    if hi.is_some() {
                        break;
                    }
                    t *= 2.0;
                    if t > 1e12 {
                        break;
                    }
                }
                Basin::Escaped(_) => {
                    consider(probe, &mut best);
                    hi = Some(t);
                    if lo.is_some() {
                        break;
                    }
                    t *= 0.5;
                    if t < 1e-10 {
                        break;
                    }
                }
            }
        }
        let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
            return Ok(RayOutcome {
                found: None,
                best_candidate: best,
                bracket: None,
                saw_escape: hi.is_some(),
            });
        };
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }

        // Amplitude bisection onto the basin boundary; the guard critical
        // point is reached when a near-boundary probe converges.
        let mut lo_class = Classification::Trivial;
        let mut hi_class = Classification::Trivial;
        for _ in 0..cfg.bisect_depth {
            let mid = 0.5 * (lo + hi);
            let probe = run_probe(self.pp, &dir.scaled(mid), &probe_params, cfg.part_tol)?;
            if certified(self.pp, &probe, self.want, self.tol, cfg)? {
                return Ok(RayOutcome {
                    found: Some(probe.report),
                    best_candidate: None,
                    bracket: Some(BracketDiagnostics {
                        kind: "ray".into(),
                        lo,
                        hi,
                        final_width: hi - lo,
                        lo_class,
                        hi_class,
                    }),
                    saw_escape: true,
                });
            }
            // A slow boundary probe of the right class gets one extended run.
            if probe.class == self.want && probe.report.reason != TerminationReason::Diverged {
                let extended = flow_to_critical(self.pp, &probe.report.field, &self.full_params())?;
                let eprobe = Probe {
                    class: classify(self.pp.grid(), &extended.field, cfg.part_tol)?,
                    basin: match extended.reason {
                        TerminationReason::Diverged => Basin::Escaped(Classification::Trivial),
                        _ => Basin::Lower(Classification::Trivial),
                    },
                    report: extended,
                };
                if certified(self.pp, &eprobe, self.want, self.tol, cfg)? {
                    return Ok(RayOutcome {
                        found: Some(eprobe.report),
                        best_candidate: None,
                        bracket: Some(BracketDiagnostics {
                            kind: "ray".into(),
                            lo,
                            hi,
                            final_width: hi - lo,
                            lo_class,
                            hi_class,
                        }),
                        saw_escape: true,
                    });
                }
                consider(eprobe, &mut best);
            }
            match probe.basin {
                Basin::Escaped(c) => {
                    hi = mid;
                    hi_class = c;
                    consider(probe, &mut best);
                }
                Basin::Lower(c) => {
                    lo = mid;
                    lo_class = c;
                    consider(probe, &mut best);
                }
            }
        }
        Ok(RayOutcome {
            found: None,
            best_candidate: best,
            bracket: Some(BracketDiagnostics {
                kind: "ray".into(),
                lo,
                hi,
                final_width: hi - lo,
                lo_class,
                hi_class,
            }),
            saw_escape: true,
        })
    }

    fn full_params(&self) -> FlowParams {
        FlowParams {
            tol: self.tol,
            ..self.cfg.flow.clone()
        }
    }
}

fn cone_search(
    pp: &PenaltyProblem,
    cfg: &SearchConfig,
    want: Classification,
    sign: f64,
) -> Result<SolutionSlot> {
    cfg.validate()?;
    let grid = pp.grid();
    if cfg.t0 == 0.0 {
        // zero seed is the trivial fixed point
        let report = flow_to_critical(pp, &Field::zeros(grid.interior_count()), &cfg.flow)?;
        return SolutionSlot::from_report(
            grid,
            report,
            false,
            Some("seed amplitude t0 = 0 flows to the trivial critical point".into()),
            cfg.part_tol,
        );
    }
    let eig = crate::grid::eigenpairs(grid, 2)?;
    let (e1, _e2) = orthonormalize_h1(grid, &eig[0], &eig[1])?;
    let dir = e1.scaled(sign);
    let search = RaySearch { pp, cfg, want, tol: cfg.flow.tol };
    let outcome = search.run(&dir, cfg.t0)?;
    if let Some(report) = outcome.found {
        return SolutionSlot::from_report(grid, report, true, None, cfg.part_tol);
    }
    if let Some(best) = outcome.best_candidate {
        let reason = format!(
            "ray bisection exhausted; best {want} candidate has gradient norm {:.3e}",
            best.grad_norm
        );
        return SolutionSlot::from_report(grid, best, false, Some(reason), cfg.part_tol);
    }
    Ok(SolutionSlot::not_found(
        grid,
        if outcome.saw_escape {
            format!("no {want} critical point certified along the cone ray")
        } else {
            "all cone-ray seeds flowed to the trivial basin".into()
        },
    ))
}

/// Positive solution: bisect along the `+φ̂1` ray.
pub fn find_positive(pp: &PenaltyProblem, cfg: &SearchConfig) -> Result<SolutionSlot> {
    cone_search(pp, cfg, Classification::Positive, 1.0)
}

/// Negative solution: mirror of [`find_positive`] along `-φ̂1`.
pub fn find_negative(pp: &PenaltyProblem, cfg: &SearchConfig) -> Result<SolutionSlot> {
    cone_search(pp, cfg, Classification::Negative, -1.0)
}

/// Sign-changing solution via basin-boundary bisection in the spectral plane:
/// probe an angle mesh at radius `r_seed`, bisect adjacent angles whose
/// endpoints land in different basins, then fall back to amplitude bisection
/// along the mesh rays (most `φ̂2`-aligned first).
pub fn find_sign_changing(pp: &PenaltyProblem, cfg: &SearchConfig) -> Result<(SolutionSlot, Option<BracketDiagnostics>)> {
    cfg.validate()?;
    let grid = pp.grid();
    let want = Classification::SignChanging;
    let tol = cfg.sc_flow().tol;
    let eig = crate::grid::eigenpairs(grid, 2)?;
    let (e1, e2) = orthonormalize_h1(grid, &eig[0], &eig[1])?;
    let m = cfg.angle_count;
    let angles: Vec<f64> = (0..m)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / m as f64)
        .collect();
    let dirs: Vec<Field> = angles
        .iter()
        .map(|&th| {
            let (c, si) = angle_components(th);
            e1.lin_comb(c, &e2, si)
        })
        .collect();

    // (a)-(b): probe the angle mesh and classify endpoints.
    let probe_params = FlowParams { tol, ..cfg.probe_params() };
    let probes: Vec<Probe> = dirs
        .par_iter()
        .map(|d| run_probe(pp, &d.scaled(cfg.r_seed), &probe_params, cfg.part_tol))
        .collect::<Result<Vec<_>>>()?;
    for p in &probes {
        if certified(pp, p, want, tol, cfg)? {
            let slot = SolutionSlot::from_report(grid, clone_report(&p.report), true, None, cfg.part_tol)?;
            return Ok((slot, None));
        }
    }

    let mut best: Option<CriticalPointReport> = None;
    let consider = |report: &CriticalPointReport, class: Classification, best: &mut Option<CriticalPointReport>| {
        if class == want {
            let better = match best {
                Some(b) => report.grad_norm < b.grad_norm,
                None => true,
            };
            if better {
                *best = Some(clone_report(report));
            }
        }
    };
    for p in &probes {
        consider(&p.report, p.class, &mut best);
    }

    // (c): collect adjacent differing-label pairs, strict P/N pairs first.
    let labels: Vec<Classification> = probes.iter().map(|p| p.class).collect();
    let mut pairs: Vec<(usize, usize, bool)> = Vec::new();
    for i in 0..m {
        let j = (i + 1) % m;
        if labels[i] != labels[j] {
            let strict = matches!(
                (labels[i], labels[j]),
                (Classification::Positive, Classification::Negative)
                    | (Classification::Negative, Classification::Positive)
            );
            pairs.push((i, j, strict));
        }
    }
    pairs.sort_by_key(|&(_, _, strict)| !strict);

    let mut last_bracket: Option<BracketDiagnostics> = None;
    let two_pi = 2.0 * std::f64::consts::PI;
    for &(i, j, _) in pairs.iter().take(4) {
        // (d): bisect the arc between the differing labels.
        let mut lo = angles[i];
        let mut hi = if j == 0 { two_pi } else { angles[j] };
        let lo_class = labels[i];
        let mut hi_class = labels[j];
        for _ in 0..cfg.bisect_depth {
            let mid = 0.5 * (lo + hi);
            let (c, si) = angle_components(mid);
            let d = e1.lin_comb(c, &e2, si);
            let probe = run_probe(pp, &d.scaled(cfg.r_seed), &probe_params, cfg.part_tol)?;
            if certified(pp, &probe, want, tol, cfg)? {
                let slot = SolutionSlot::from_report(grid, probe.report, true, None, cfg.part_tol)?;
                return Ok((
                    slot,
                    Some(BracketDiagnostics {
                        kind: "arc".into(),
                        lo,
                        hi,
                        final_width: hi - lo,
                        lo_class,
                        hi_class,
                    }),
                ));
            }
            if probe.class == want && probe.report.reason != TerminationReason::Diverged {
                let extended = flow_to_critical(pp, &probe.report.field, &FlowParams { tol, ..cfg.flow.clone() })?;
                let eclass = classify(grid, &extended.field, cfg.part_tol)?;
                let eprobe = Probe {
                    class: eclass,
                    basin: match extended.reason {
                        TerminationReason::Diverged => Basin::Escaped(eclass),
                        _ => Basin::Lower(eclass),
                    },
                    report: extended,
                };
                if certified(pp, &eprobe, want, tol, cfg)? {
                    let slot = SolutionSlot::from_report(grid, eprobe.report, true, None, cfg.part_tol)?;
                    return Ok((
                        slot,
                        Some(BracketDiagnostics {
                            kind: "arc".into(),
                            lo,
                            hi,
                            final_width: hi - lo,
                            lo_class,
                            hi_class,
                        }),
                    ));
                }
                consider(&eprobe.report, eprobe.class, &mut best);
            }
            consider(&probe.report, probe.class, &mut best);
            // shrink toward the side whose classification differs
            if probe.class == lo_class {
                lo = mid;
            } else if probe.class == hi_class {
                hi = mid;
            } else {
                hi = mid;
                hi_class = probe.class;
            }
            let _ = lo_class;
        }
        last_bracket = Some(BracketDiagnostics {
            kind: "arc".into(),
            lo,
            hi,
            final_width: hi - lo,
            lo_class,
            hi_class,
        });
    }

    // Radial fallback: amplitude bisection along the mesh rays, most
    // φ̂2-aligned first (those cross the sign-changing stable set). Rays run
    // sequentially so the common case (the first ray certifies) stays cheap.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        angles[b]
            .sin()
            .abs()
            .total_cmp(&angles[a].sin().abs())
            .then(angles[a].total_cmp(&angles[b]))
    });
    let search = RaySearch { pp, cfg, want, tol };
    for &idx in &order {
        let outcome = search.run(&dirs[idx], cfg.r_seed)?;
        if let Some(report) = outcome.found {
            let slot = SolutionSlot::from_report(grid, report, true, None, cfg.part_tol)?;
            return Ok((slot, outcome.bracket.or(last_bracket)));
        }
        if let Some(b) = outcome.best_candidate {
            consider(&b, classify(grid, &b.field, cfg.part_tol)?, &mut best);
        }
    }

    // (e): depth exhausted everywhere; settle for the best candidate if any.
    if let Some(b) = best {
        let reason = format!(
            "bisection budget exhausted; best sign-changing candidate has gradient norm {:.3e}",
            b.grad_norm
        );
        let slot = SolutionSlot::from_report(grid, b, false, Some(reason), cfg.part_tol)?;
        return Ok((slot, last_bracket));
    }
    let all_same = labels.windows(2).all(|w| w[0] == w[1]);
    let reason = if all_same {
        format!("all {m} angle-mesh seeds flowed to one basin ({})", labels[0])
    } else {
        "no sign-changing critical point certified".into()
    };
    Ok((SolutionSlot::not_found(grid, reason), last_bracket))
}

fn clone_report(r: &CriticalPointReport) -> CriticalPointReport {
    CriticalPointReport {
        field: r.field.clone(),
        grad_norm: r.grad_norm,
        energy: r.energy,
        iterations: r.iterations,
        reason: r.reason,
        history: r.history.clone(),
    }
}

/// Run the three searches and check pairwise distinctness.
pub fn solve_triple(pp: &PenaltyProblem, cfg: &SearchConfig) -> Result<TripleReport> {
    let positive = find_positive(pp, cfg)?;
    let negative = find_negative(pp, cfg)?;
    let (sign_changing, bracket) = find_sign_changing(pp, cfg)?;

    let threshold = 10.0 * cfg.flow.tol;
    let mut min_dist: Option<f64> = None;
    let slots = [&positive, &negative, &sign_changing];
    for a in 0..slots.len() {
        for b in a + 1..slots.len() {
            if slots[a].found && slots[b].found {
                let diff = slots[a].field.lin_comb(1.0, &slots[b].field, -1.0);
                let d = h1_norm(pp.grid(), &diff)?;
                min_dist = Some(min_dist.map_or(d, |m: f64| m.min(d)));
            }
        }
    }
    let distinct = min_dist.map_or(false, |d| d >= threshold);
    Ok(TripleReport {
        positive,
        negative,
        sign_changing,
        bracket,
        min_pairwise_distance: min_dist,
        distinctness_threshold: threshold,
        distinct,
    })
}

/// Number of nodal domains: connected components of `{u > 0}` plus those of
/// `{u < 0}` under 4-neighbor (resp. 2-neighbor) adjacency.
pub fn nodal_domains(grid: &Grid, u: &Field, zero_tol: f64) -> Result<usize> {
    grid.check_conforms(u)?;
    let n = grid.interior_count();
    let sign = |v: f64| -> i8 {
        if v > zero_tol {
            1
        } else if v < -zero_tol {
            -1
        } else {
            0
        }
    };
    let signs: Vec<i8> = u.iter().map(|&v| sign(v)).collect();
    let mut seen = vec![false; n];
    let mut count = 0usize;
    let (nx, ny) = match grid.dimension() {
        1 => (grid.counts()[0], 1),
        _ => (grid.counts()[0], grid.counts()[1]),
    };
    for start in 0..n {
        if seen[start] || signs[start] == 0 {
            continue;
        }
        count += 1;
        let s = signs[start];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let ix = i % nx;
            let iy = i / nx;
            let push = |j: usize, stack: &mut Vec<usize>, seen: &mut Vec<bool>| {
                if !seen[j] && signs[j] == s {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if ix > 0 {
                push(i - 1, &mut stack, &mut seen);
            }
            if ix + 1 < nx {
                push(i + 1, &mut stack, &mut seen);
            }
            if iy > 0 {
                push(i - nx, &mut stack, &mut seen);
            }
            if iy + 1 < ny {
                push(i + nx, &mut stack, &mut seen);
            }
        }
    }
    Ok(count)
}
