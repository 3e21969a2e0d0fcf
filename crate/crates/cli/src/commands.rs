use std::sync::Arc;

use serde_json::json;

use rdelab::analysis::{critical_scan, speed_from_l, speed_from_l_max, GridConfig, ScanResult};
use rdelab::catalog::{brw_spec_from, build_spec, closed_cdf, init_sampler, ParamMap};
use rdelab::engine::{Distance, IterationReport};
use rdelab::tree::{frozen_perc_local_stats, greedy_replicas, simulate_brw_replicas};
use rdelab::{
    endogeny_iterate, iterate, registry, EndogenyConfig, IterConfig, Rde, SamplePool, Sampler,
    StopReason,
};

use crate::artifacts::Artifacts;
use crate::config::{EndogenyStart, RunConfig, SimMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_MAX_ITERS: i32 = 3;

type CmdResult = Result<i32, String>;

fn err(e: rdelab::Error) -> String {
    e.to_string()
}

pub fn list() -> CmdResult {
    let reg = registry();
    for item in reg.listing() {
        let kind = item
            .oracle_kind
            .map(|k| format!("{k:?}"))
            .unwrap_or_else(|| "none".into());
        let params: Vec<String> = item
            .params
            .iter()
            .map(|p| format!("{}={}", p.name, p.default))
            .collect();
        println!(
            "{:<24} {:<14} oracle={:<12} anchor: {}  [{}]",
            item.id,
            item.state_space,
            to_snake(&kind),
            item.anchor,
            params.join(" ")
        );
    }
    println!("{} entries", reg.len());
    Ok(EXIT_OK)
}

fn to_snake(s: &str) -> String {
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if ch.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

fn spec_for(cfg: &RunConfig, params: &ParamMap) -> Result<Arc<dyn Rde>, String> {
    let id = cfg.entry()?;
    registry().resolve(id, params).map_err(err)?;
    build_spec(id, params).map_err(err)
}

fn iter_config(cfg: &RunConfig) -> IterConfig {
    IterConfig {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        distance: Distance::Ks,
        divergence_threshold: cfg.iterate.divergence_threshold,
        window: cfg.iterate.window,
        min_iters: cfg.iterate.min_iters,
        divergence_level: 0.5,
        period: cfg.iterate.period,
        seed: cfg.seeds().iterate,
    }
}

fn run_to_fixed_point(
    cfg: &RunConfig,
    spec: &dyn Rde,
    min_iters: usize,
) -> Result<(SamplePool, IterationReport), String> {
    let id = cfg.entry()?;
    let init = SamplePool::sample(
        init_sampler(id, &cfg.params).map_err(err)?.as_ref(),
        cfg.pool,
        cfg.seeds().init,
    );
    let mut ic = iter_config(cfg);
    ic.min_iters = ic.min_iters.max(min_iters).min(ic.max_iters);
    iterate(spec, &init, &ic).map_err(err)
}

fn record_generations(art: &mut Artifacts, report: &IterationReport) -> Result<(), String> {
    for r in &report.records {
        art.record("generation", r)?;
    }
    Ok(())
}

pub fn iterate_cmd(cfg: &RunConfig) -> CmdResult {
    let spec = spec_for(cfg, &cfg.params)?;
    let mut art = Artifacts::new(cfg)?;
    let (pool, report) = run_to_fixed_point(cfg, spec.as_ref(), 1)?;
    record_generations(&mut art, &report)?;
    let last = report.records.last().map(|r| &r.summary);
    art.record(
        "result",
        &json!({
            "stop_reason": report.stop_reason,
            "generations": report.records.len(),
            "capped_total": report.capped_total,
            "final": last,
        }),
    )?;
    art.write_pool(&pool)?;
    art.write_hist(&pool, cfg.hist.bins)?;
    art.finish()?;
    if let Some(s) = last {
        println!(
            "{}: {:?} after {} generations; mean {:.6} variance {:.6} frac_inf {:.4}",
            cfg.entry()?,
            report.stop_reason,
            report.records.len(),
            s.mean,
            s.variance,
            s.frac_inf
        );
    }
    println!("artifacts in {}", art.dir().display());
    Ok(match report.stop_reason {
        StopReason::Converged => EXIT_OK,
        StopReason::Diverged => EXIT_DIVERGED,
        StopReason::MaxIters => EXIT_MAX_ITERS,
    })
}

pub fn endogeny_cmd(cfg: &RunConfig) -> CmdResult {
    let spec = spec_for(cfg, &cfg.params)?;
    let mut art = Artifacts::new(cfg)?;
    let (fixed, stop) = match cfg.endogeny.start {
        EndogenyStart::Iterate => {
            let (fixed, report) = run_to_fixed_point(cfg, spec.as_ref(), 1)?;
            record_generations(&mut art, &report)?;
            if report.stop_reason == StopReason::Diverged {
                art.record(
                    "result",
                    &json!({ "stop_reason": report.stop_reason, "verdict": null }),
                )?;
                art.finish()?;
                println!(
                    "{}: iteration diverged; no fixed point to test",
                    cfg.entry()?
                );
                return Ok(EXIT_DIVERGED);
            }
            (fixed, Some(report.stop_reason))
        }
        EndogenyStart::Oracle => {
            let oracle = closed_cdf(cfg.entry()?, &cfg.params).map_err(err)?;
            let sampler: &dyn Sampler = oracle.as_ref();
            (
                SamplePool::sample(sampler, cfg.pool, cfg.seeds().init),
                None,
            )
        }
    };
    let e = &cfg.endogeny;
    let ec = EndogenyConfig {
        max_iters: e.max_iters,
        gap_tol: e.gap_tol,
        plateau_window: e.plateau_window,
        plateau_rel: e.plateau_rel,
        p: e.p,
        seed: cfg.seeds().endogeny,
    };
    let er = endogeny_iterate(spec.as_ref(), &fixed, &ec).map_err(err)?;
    for r in &er.records {
        art.record("gap", r)?;
    }
    let final_gap = er.final_gap();
    art.record(
        "result",
        &json!({
            "fixed_point_stop": stop,
            "verdict": er.verdict,
            "final_gap": final_gap,
            "generations": er.records.len(),
        }),
    )?;
    art.write_csv(
        "gap.csv",
        "generation,raw,normalized",
        er.records
            .iter()
            .map(|r| format!("{},{},{}", r.generation, r.gap.raw, r.gap.normalized)),
    )?;
    art.finish()?;
    println!(
        "{}: {} (normalized gap {:.4} after {} generations)",
        cfg.entry()?,
        er.verdict.as_str(),
        final_gap.map_or(f64::NAN, |g| g.normalized),
        er.records.len()
    );
    Ok(EXIT_OK)
}

fn default_bracket(id: &str) -> Option<(f64, f64)> {
    match id {
        "meanfield_subtree" => Some(((-2f64).exp(), (-1f64).exp())),
        _ => None,
    }
}

pub fn scan_cmd(cfg: &RunConfig) -> CmdResult {
    let id = cfg.entry()?.to_string();
    let s = &cfg.scan;
    let (dlo, dhi) = default_bracket(&id).unzip();
    let lo =
        s.lo.or(dlo)
            .ok_or("scan needs scan.lo (no default bracket for this entry)")?;
    let hi =
        s.hi.or(dhi)
            .ok_or("scan needs scan.hi (no default bracket for this entry)")?;
    let entry = registry().get(&id).map_err(err)?;
    if !entry.params().iter().any(|p| p.name == s.param) {
        return Err(format!("`{id}` has no parameter `{}`", s.param));
    }
    let family = |v: f64| {
        let mut p = cfg.params.clone();
        p.insert(s.param.clone(), format!("{v}"));
        build_spec(&id, &p)
    };
    let grid = GridConfig {
        points: s.points,
        bisections: s.bisections,
        orientation: s.orientation,
        pool: cfg.pool,
    };
    let mut ic = iter_config(cfg);
    ic.max_iters = s.generations;
    ic.min_iters = s.generations;
    ic.seed = cfg.seeds().scan;
    let mut art = Artifacts::new(cfg)?;
    let r: ScanResult = critical_scan(&family, (lo, hi), &grid, &ic).map_err(err)?;
    for p in r.grid.iter().chain(&r.bisection) {
        art.record(
            "point",
            &json!({
                "param": p.param,
                "seed": p.seed,
                "raw": p.raw,
                "verdict": p.verdict,
                "stop_reason": p.report.stop_reason,
                "generations": p.report.records.len(),
            }),
        )?;
    }
    art.record(
        "result",
        &json!({ "estimate": r.estimate, "bracket": r.bracket, "width": r.width, "flips": r.flips }),
    )?;
    art.write_csv(
        "scan.csv",
        "param,phase,raw,verdict,generations",
        r.grid
            .iter()
            .map(|p| (p, "grid"))
            .chain(r.bisection.iter().map(|p| (p, "bisection")))
            .map(|(p, ph)| {
                format!(
                    "{},{ph},{:?},{:?},{}",
                    p.param,
                    p.raw,
                    p.verdict,
                    p.report.records.len()
                )
            }),
    )?;
    art.finish()?;
    println!(
        "{id}: critical {} estimate {:.4} bracket [{:.4}, {:.4}]",
        s.param, r.estimate, r.bracket.0, r.bracket.1
    );
    Ok(EXIT_OK)
}

pub fn simulate_cmd(cfg: &RunConfig) -> CmdResult {
    let id = cfg.entry()?.to_string();
    let mode = cfg
        .simulate
        .mode
        .or_else(|| SimMode::for_entry(&id))
        .ok_or_else(|| format!("no simulation mode for `{id}`; set simulate.mode"))?;
    let (_, params) = registry().resolve(&id, &cfg.params).map_err(err)?;
    let sim = &cfg.simulate;
    let seed = cfg.seeds().simulate;
    let mut art = Artifacts::new(cfg)?;
    match mode {
        SimMode::Brw => {
            let bs = brw_spec_from(&params).map_err(err)?;
            let t = simulate_brw_replicas(&bs, sim.generations, sim.cap, sim.replicas, seed)
                .map_err(err)?;
            let g = t.median.len();
            let drift = if g >= 4 {
                let a = g / 2;
                (t.median[g - 1] - t.median[a - 1]) / (g - a) as f64
            } else {
                f64::NAN
            };
            let speed = bs.speed().ok();
            art.record(
                "result",
                &json!({ "mode": mode, "drift": drift, "speed_oracle": speed, "tracks": t }),
            )?;
            art.write_csv(
                "rightmost.csv",
                "generation,median,iqr,alive",
                (0..g).map(|k| format!("{},{},{},{}", k + 1, t.median[k], t.iqr[k], t.alive[k])),
            )?;
            println!(
                "{id}: rightmost drift {drift:.4} over {g} generations; oracle speed {speed:?}"
            );
        }
        SimMode::Greedy => {
            let bs = brw_spec_from(&params).map_err(err)?;
            let runs = greedy_replicas(&bs, sim.steps, sim.replicas, seed).map_err(err)?;
            let mean_speed = runs.iter().map(|r| r.speed).sum::<f64>() / runs.len().max(1) as f64;
            let (single, max_children) = if id == "brw_greedy_L" {
                let spec = build_spec(&id, &cfg.params).map_err(err)?;
                let (l, _) = run_to_fixed_point(cfg, spec.as_ref(), 1)?;
                (
                    Some(speed_from_l(&l, &bs.xi, 1_000_000, seed).map_err(err)?),
                    Some(speed_from_l_max(&l, &bs.xi, 2, 1_000_000, seed).map_err(err)?),
                )
            } else {
                (None, None)
            };
            art.record(
                "result",
                &json!({
                    "mode": mode,
                    "speed": mean_speed,
                    "e_pos_xi_plus_l": single,
                    "e_pos_max_xi_plus_l": max_children,
                    "runs": runs,
                }),
            )?;
            art.write_csv(
                "greedy.csv",
                "replica,n,q_over_n",
                runs.iter()
                    .enumerate()
                    .flat_map(|(i, r)| r.track.iter().map(move |(n, q)| format!("{i},{n},{q}"))),
            )?;
            println!(
                "{id}: greedy speed {mean_speed:.4} over {} replicas; E[(xi+L)+] {single:?}; E[(max_i(xi_i+L_i))+] {max_children:?}",
                runs.len()
            );
        }
        SimMode::FrozenStats => {
            let spec = build_spec(&id, &cfg.params).map_err(err)?;
            let (pool, report) = run_to_fixed_point(cfg, spec.as_ref(), 50)?;
            let st = frozen_perc_local_stats(&pool, sim.samples, seed).map_err(err)?;
            art.record(
                "result",
                &json!({ "mode": mode, "fixed_point_stop": report.stop_reason, "stats": st }),
            )?;
            art.write_csv(
                "z_density.csv",
                "bin_lo,bin_hi,count,density",
                st.z_bins
                    .iter()
                    .zip(&st.z_density)
                    .map(|((lo, hi, c), d)| format!("{lo},{hi},{c},{d}")),
            )?;
            println!(
                "{id}: p_edge_inf {:.4} p_edge_fin {:.4} p_edge_out {:.4} p_vertex_inf {:.4} p_vertex_fin {:.4} p_vertex_out {:.4}",
                st.p_edge_inf, st.p_edge_fin, st.p_edge_out, st.p_vertex_inf, st.p_vertex_fin, st.p_vertex_out
            );
        }
    }
    art.finish()?;
    Ok(EXIT_OK)
}
