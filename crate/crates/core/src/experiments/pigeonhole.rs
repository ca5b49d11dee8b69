//! The counting collision demo: enumerate an ε-separated packing, quantize
//! every member's amplitude matrix into a deliberately coarse δ-net, and
//! exhibit two ε-separated potentials whose amplitudes share a net cell.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::amplitude_space::{
    interval_sup_norm, log_sup_weight, stefanov_norm, AmplitudeMatrix,
};
use crate::error::{Result, ScatError};
use crate::experiments::config::Resolved;
use crate::experiments::report::{fnum, write_atomic, Table};
use crate::metric_nets::{
    build_amplitude_net, build_packing, find_collision, quantize_to_net, NetIndex, PackingFamily,
};
use crate::pipeline::AmplitudeJob;
use crate::potential_model::{cm_norm_estimate, linf_distance, make_bump, Potential};
use crate::sphere_basis::HarmonicIndex;
use crate::vec3::Vec3;

/// Hard cap on exhaustive enumeration: 2^12 members.
const MAX_ENUMERATED_BUMPS: usize = 12;

pub struct MemberRecord {
    pub id: u64,
    pub quantize_distance: f64,
    pub cell_fingerprint: u64,
}

pub struct PigeonholeReport {
    /// log2 of the full packing size 2^{k³}.
    pub packing_log2: f64,
    pub members_enumerated: usize,
    pub net_ln_cardinality: f64,
    pub net_cardinality: Option<u64>,
    pub net_l_max: usize,
    pub c2: f64,
    pub c4: f64,
    pub max_quantize_distance: f64,
    pub members: Vec<MemberRecord>,
    /// Ids of the reported pair and whether they share a net cell.
    pub pair: (u64, u64),
    pub collision: bool,
    pub linf_distance: f64,
    pub interval_norm_distance: f64,
    pub stefanov_sup_distance: f64,
    /// The four measured-inequality audits: amplitude distance under the
    /// 2c₃δ bound, potential separation at least ε, members within ε of the
    /// center, C^m estimates within β.
    pub audit_amplitude: bool,
    pub audit_separation: bool,
    pub audit_center: bool,
    pub audit_budget: bool,
    pub pass: bool,
}

fn fingerprint(index: &NetIndex) -> u64 {
    // FNV-1a over the cell integers: stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    };
    eat(index.l_max as u64);
    for block in &index.cells {
        for &(a, b) in block {
            eat(a as u64);
            eat(b as u64);
        }
    }
    h
}

fn build_v0(r: &Resolved) -> Result<Option<Potential>> {
    if r.raw.v0_amplitude == 0.0 {
        return Ok(None);
    }
    Ok(Some(make_bump(r.grid, Vec3::new(0.0, 0.0, 0.0), 0.45, r.raw.v0_amplitude, r.budget.m)?))
}

fn member_potential(family: &PackingFamily, v0: &Option<Potential>, id: u64) -> Result<Potential> {
    let z = family.member_by_index(id)?;
    match v0 {
        Some(base) => base.sum(&z),
        None => Ok(z),
    }
}

/// Picks which member ids to enumerate: all of them, or a seeded subset of
/// `cap` ids, sorted ascending for determinism.
fn choose_members(total: u64, cap: Option<usize>, seed: u64) -> Vec<u64> {
    let all: Vec<u64> = (0..total).collect();
    match cap {
        Some(c) if (c as u64) < total => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<u64> =
                all.choose_multiple(&mut rng, c.max(2)).copied().collect();
            picked.sort_unstable();
            picked
        }
        _ => all,
    }
}

/// Measured class constants for the net: `c2` bounds every entry magnitude,
/// `c4` the weighted degree envelope `c₄(2l+1)^{σ₁+σ₂}2^{−l}`. Doubled so
/// the corpus sits strictly inside the class it defines.
fn measure_class_bounds(matrices: &[AmplitudeMatrix], r: &Resolved) -> (f64, f64) {
    let sigma = r.weights.sigma1 + r.weights.sigma2;
    let mut c2 = 0.0_f64;
    let mut c4 = 0.0_f64;
    for m in matrices {
        let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(m.l_max()).collect();
        for (si, &s) in m.interval().samples().iter().enumerate() {
            for i1 in &indices {
                for i2 in &indices {
                    let a = m.entry(si, *i1, *i2).norm();
                    c2 = c2.max(a);
                    let l = i1.j.max(i2.j);
                    let lw = log_sup_weight(i1.j, r.weights.sigma1, s)
                        + log_sup_weight(i2.j, r.weights.sigma2, s);
                    let envelope_inv =
                        (l as f64) * std::f64::consts::LN_2 - sigma * ((2 * l + 1) as f64).ln();
                    c4 = c4.max((lw + envelope_inv).exp() * a);
                }
            }
        }
    }
    (2.0 * c2.max(f64::MIN_POSITIVE), 2.0 * c4.max(f64::MIN_POSITIVE))
}

pub fn run(r: &Resolved) -> Result<PigeonholeReport> {
    let family = build_packing(r.grid, r.budget)?;
    let bumps = family.layout.bump_count();
    if bumps > MAX_ENUMERATED_BUMPS {
        return Err(ScatError::InvalidConfig(format!(
            "packing has {bumps} bump slots (2^{bumps} members); enumeration is capped at \
             2^{MAX_ENUMERATED_BUMPS} — raise epsilon or lower beta"
        )));
    }
    let total = 1u64 << bumps;
    let ids = choose_members(total, r.raw.member_cap, r.raw.seed);

    let v0 = build_v0(r)?;
    let template = member_potential(&family, &v0, 0)?;
    let job = AmplitudeJob::new(&template, &r.interval, r.raw.h, r.l_max, &r.solver)?;

    let potentials = ids
        .iter()
        .map(|&id| member_potential(&family, &v0, id))
        .collect::<Result<Vec<_>>>()?;
    let matrices =
        potentials.iter().map(|v| job.compute(v)).collect::<Result<Vec<_>>>()?;

    let (c2, c4) = measure_class_bounds(&matrices, r);
    let net = build_amplitude_net(r.delta, r.weights, &r.interval, r.raw.h, c2, c4)?;

    let mut members = Vec::with_capacity(ids.len());
    let mut quantized = Vec::with_capacity(ids.len());
    let mut max_q_dist = 0.0_f64;
    for (slot, &id) in ids.iter().enumerate() {
        let q = quantize_to_net(&matrices[slot], &net)?;
        max_q_dist = max_q_dist.max(q.distance);
        members.push(MemberRecord {
            id,
            quantize_distance: q.distance,
            cell_fingerprint: fingerprint(&q.index),
        });
        quantized.push((slot, q.index));
    }

    let (pair_slots, collision) = match find_collision(&quantized) {
        Some(pair) => (pair, true),
        None => (nearest_pair(&matrices, r), false),
    };
    let (ia, ib) = pair_slots;
    let diff = matrices[ia].sub(&matrices[ib])?;
    let interval_norm_distance = interval_sup_norm(&diff, r.weights);
    let stefanov_sup_distance = r
        .interval
        .samples()
        .iter()
        .map(|&s| stefanov_norm(&diff, s, r.weights))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0_f64, f64::max);
    let linf = linf_distance(&potentials[ia], &potentials[ib])?;

    let center = match &v0 {
        Some(base) => base.clone(),
        None => Potential::zero(r.grid),
    };
    let off_center = linf_distance(&potentials[ia], &center)?
        .max(linf_distance(&potentials[ib], &center)?);
    let budget_use = cm_norm_estimate(&potentials[ia], r.budget.m)?
        .max(cm_norm_estimate(&potentials[ib], r.budget.m)?);

    let slack = 1.0 + 1e-9;
    let audit_amplitude = stefanov_sup_distance <= 2.0 * r.c3 * r.delta * slack;
    let audit_separation = linf >= r.budget.epsilon / slack;
    let audit_center = off_center <= r.budget.epsilon * slack;
    let audit_budget = budget_use <= r.budget.beta * slack;
    let within_two_delta = interval_norm_distance <= 2.0 * r.delta * slack;
    let pass = collision
        && within_two_delta
        && audit_amplitude
        && audit_separation
        && audit_center
        && audit_budget;

    Ok(PigeonholeReport {
        packing_log2: bumps as f64,
        members_enumerated: ids.len(),
        net_ln_cardinality: net.ln_cardinality(),
        net_cardinality: net.cardinality(),
        net_l_max: net.l_max,
        c2,
        c4,
        max_quantize_distance: max_q_dist,
        members,
        pair: (ids[ia], ids[ib]),
        collision,
        linf_distance: linf,
        interval_norm_distance,
        stefanov_sup_distance,
        audit_amplitude,
        audit_separation,
        audit_center,
        audit_budget,
        pass,
    })
}

/// Fallback when no two members share a cell: the closest pair in the
/// interval norm.
fn nearest_pair(matrices: &[AmplitudeMatrix], r: &Resolved) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_d = f64::INFINITY;
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            let d = matrices[i]
                .sub(&matrices[j])
                .map(|diff| interval_sup_norm(&diff, r.weights))
                .unwrap_or(f64::INFINITY);
            if d < best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

pub fn write_reports(r: &Resolved, rep: &PigeonholeReport, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("manifest.txt"), &r.manifest("pigeonhole"))?;

    let mut table = Table::new(["member", "quantize_distance", "cell_fingerprint"]);
    for m in &rep.members {
        table.push(vec![
            m.id.to_string(),
            fnum(m.quantize_distance),
            format!("{:016x}", m.cell_fingerprint),
        ]);
    }
    write_atomic(&dir.join("members.csv"), &table.render())?;

    let mut s = String::new();
    let _ = writeln!(s, "packing_log2_size = {}", fnum(rep.packing_log2));
    let _ = writeln!(s, "members_enumerated = {}", rep.members_enumerated);
    let _ = writeln!(s, "net_ln_cardinality = {}", fnum(rep.net_ln_cardinality));
    match rep.net_cardinality {
        Some(n) => {
            let _ = writeln!(s, "net_cardinality = {n}");
        }
        None => {
            let _ = writeln!(s, "net_cardinality = overflow");
        }
    }
    let _ = writeln!(s, "net_l_max = {}", rep.net_l_max);
    let _ = writeln!(s, "c2_measured = {}", fnum(rep.c2));
    let _ = writeln!(s, "c4_measured = {}", fnum(rep.c4));
    let _ = writeln!(s, "max_quantize_distance = {}", fnum(rep.max_quantize_distance));
    let _ = writeln!(s, "delta = {}", fnum(r.delta));
    let _ = writeln!(s, "pair = {} {}", rep.pair.0, rep.pair.1);
    let _ = writeln!(s, "collision = {}", rep.collision);
    let _ = writeln!(s, "pair_linf_distance = {}", fnum(rep.linf_distance));
    let _ = writeln!(s, "pair_interval_norm = {}", fnum(rep.interval_norm_distance));
    let _ = writeln!(s, "pair_stefanov_sup = {}", fnum(rep.stefanov_sup_distance));
    let _ = writeln!(s, "bound_two_c3_delta = {}", fnum(2.0 * r.c3 * r.delta));
    let _ = writeln!(s, "audit_amplitude = {}", rep.audit_amplitude);
    let _ = writeln!(s, "audit_separation = {}", rep.audit_separation);
    let _ = writeln!(s, "audit_center = {}", rep.audit_center);
    let _ = writeln!(s, "audit_budget = {}", rep.audit_budget);
    let _ = writeln!(s, "pass = {}", rep.pass);
    write_atomic(&dir.join("report.txt"), &s)?;
    Ok(())
}
