use serde::{Deserialize, Serialize};

use super::disorder::{nishimori_beta, DisorderRates, DisorderSource, DisorderSpec};
use super::{ModelKind, ModelMetadata, SpinModel, SpinRole, Term};
use crate::error::CoreError;
use crate::gf2::BitVec;
use crate::lattice::{CodeLattice, Color};
use crate::noise::{sample_chain, sample_history, ErrorRates};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Qp,
    Bilinear(Color),
}

fn flags_to_taus(flags: &BitVec) -> Vec<i8> {
    (0..flags.len()).map(|i| if flags.get(i) { -1 } else { 1 }).collect()
}

fn explicit_taus(taus: &[i8], expected: usize) -> Result<Vec<i8>, CoreError> {
    if taus.len() != expected {
        return Err(CoreError::DisorderMismatch { expected, got: taus.len() });
    }
    if let Some(bad) = taus.iter().find(|&&t| t != 1 && t != -1) {
        return Err(CoreError::InvalidModel(format!("tau {bad} is not +-1")));
    }
    Ok(taus.to_vec())
}

/// Resolves one tau per "location" (site, edge, ...) of the realization.
fn resolve(spec: &DisorderSpec, expected: usize, sample: impl FnOnce(u64) -> Result<Vec<i8>, CoreError>) -> Result<Vec<i8>, CoreError> {
    spec.rates.validate()?;
    match &spec.source {
        DisorderSource::Explicit(t) => explicit_taus(t, expected),
        DisorderSource::Sampled { seed } => sample(*seed),
        DisorderSource::Clean => Ok(vec![1; expected]),
    }
}

fn beta_for(p: f64) -> Option<f64> {
    nishimori_beta(p).ok()
}

fn metadata(lattice: &CodeLattice, rates: DisorderRates, roles: Vec<SpinRole>) -> ModelMetadata {
    ModelMetadata {
        l1: Some(lattice.l1()),
        l2: Some(lattice.l2()),
        color: None,
        rounds: None,
        beta_nishimori: None,
        rates: Some(rates),
        roles,
    }
}

fn dual_roles(plaquettes: impl Iterator<Item = usize>) -> Vec<SpinRole> {
    plaquettes.map(|plaquette| SpinRole::Dual { plaquette }).collect()
}

fn site_term(lattice: &CodeLattice, l: usize, coupling: f64) -> Term {
    Term::new(lattice.site_plaquettes(l).iter().map(|&p| p as u32).collect(), coupling)
}

/// Three-spin model: one spin per plaquette, one term per site joining its
/// three plaquettes; tau of site `l` is -1 iff it carries a QP event.
pub fn build_qp_model(lattice: &CodeLattice, disorder: &DisorderSpec) -> Result<SpinModel, CoreError> {
    let n = lattice.num_sites();
    let rates = disorder.rates;
    let taus = resolve(disorder, n, |seed| {
        Ok(flags_to_taus(&sample_chain(lattice, &ErrorRates::new(rates.p, 0.0, 0.0)?, seed)?.qp_sites))
    })?;
    let terms = (0..n)
        .zip(taus)
        .map(|(l, tau)| Term { tau, ..site_term(lattice, l, 1.0) })
        .collect();
    let mut meta = metadata(lattice, rates, dual_roles(0..lattice.num_plaquettes()));
    meta.beta_nishimori = beta_for(rates.p);
    let model = SpinModel { kind: ModelKind::Qp, num_spins: lattice.num_plaquettes(), terms, metadata: meta };
    debug_assert!(model.validate().is_ok());
    Ok(model)
}

fn edge_taus(lattice: &CodeLattice, disorder: &DisorderSpec, rate: f64) -> Result<Vec<i8>, CoreError> {
    resolve(disorder, lattice.num_edges(), |seed| {
        Ok(flags_to_taus(&sample_chain(lattice, &ErrorRates::new(0.0, rate, 0.0)?, seed)?.bilinear_edges))
    })
}

/// Per-colour two-spin models on the same-colour plaquette sublattice. Each
/// edge contributes one term between the two plaquettes its bilinear flips.
/// Spin `k` of the colour-`c` model is plaquette `3k + c`. Explicit disorder
/// carries one tau per lattice edge.
pub fn build_bilinear_models(lattice: &CodeLattice, disorder: &DisorderSpec) -> Result<[SpinModel; 3], CoreError> {
    let rates = disorder.rates;
    let taus = edge_taus(lattice, disorder, rates.q)?;
    Ok(Color::ALL.map(|color| {
        let terms = lattice
            .edges_of_color(color)
            .map(|e| {
                let [fa, fb] = lattice.edge(e).flips;
                Term { spins: vec![(fa / 3) as u32, (fb / 3) as u32], coupling: 1.0, tau: taus[e] }
            })
            .collect();
        let mut meta = metadata(lattice, rates, dual_roles(lattice.plaquettes_of_color(color)));
        meta.color = Some(color);
        meta.beta_nishimori = beta_for(rates.q);
        SpinModel { kind: ModelKind::Bilinear, num_spins: lattice.num_plaquettes() / 3, terms, metadata: meta }
    }))
}

/// Per-colour two-spin models whose spins sit on the plaquettes of the two
/// other colours. The term of edge `e` joins the two plaquettes bordering
/// `e`, so flipping spin `p` toggles exactly the colour-`c` edges of the
/// boundary of plaquette `p`, which multiply to its stabilizer.
pub fn build_bilinear_dual_models(lattice: &CodeLattice, disorder: &DisorderSpec) -> Result<[SpinModel; 3], CoreError> {
    let rates = disorder.rates;
    let taus = edge_taus(lattice, disorder, rates.q)?;
    Ok(Color::ALL.map(|color| {
        let others: Vec<usize> = (0..lattice.num_plaquettes()).filter(|&p| lattice.plaquette_color(p) != color).collect();
        let mut index = vec![u32::MAX; lattice.num_plaquettes()];
        for (k, &p) in others.iter().enumerate() {
            index[p] = k as u32;
        }
        let terms = lattice
            .edges_of_color(color)
            .map(|e| {
                let [ba, bb] = lattice.edge(e).borders;
                Term { spins: vec![index[ba], index[bb]], coupling: 1.0, tau: taus[e] }
            })
            .collect();
        let mut meta = metadata(lattice, rates, dual_roles(others.iter().copied()));
        meta.color = Some(color);
        meta.beta_nishimori = beta_for(rates.q);
        SpinModel { kind: ModelKind::BilinearDual, num_spins: others.len(), terms, metadata: meta }
    }))
}

/// Couplings `(J, K)` and the shared Nishimori inverse temperature for rates
/// `(p, q)`: `beta J = ln((1-p)/p)/2` and `beta K = ln((1-q)/q)/2`, with
/// `J = 1` unless `p = 1/2`, where `J = 0` and `K = 1`.
pub fn combined_couplings(p: f64, q: f64) -> Result<(f64, f64, f64), CoreError> {
    let bp = nishimori_beta(p)?;
    let bq = nishimori_beta(q).map_err(|_| CoreError::InvalidProbability { name: "q", value: q, range: "(0, 1)" })?;
    if bp == 0.0 && bq == 0.0 {
        Ok((1.0, 1.0, 0.0))
    } else if bp == 0.0 {
        Ok((0.0, 1.0, bq))
    } else {
        Ok((1.0, bq / bp, bp))
    }
}

/// Three-spin site terms (coupling J) plus one two-spin term per edge between
/// its flipped plaquettes (coupling K), both Nishimori-consistent at one
/// shared beta. Explicit disorder lists site taus then edge taus.
pub fn build_combined_model(lattice: &CodeLattice, disorder: &DisorderSpec) -> Result<SpinModel, CoreError> {
    let rates = disorder.rates;
    let (j, k, beta) = combined_couplings(rates.p, rates.q)?;
    let n = lattice.num_sites();
    let ne = lattice.num_edges();
    let taus = resolve(disorder, n + ne, |seed| {
        let chain = sample_chain(lattice, &ErrorRates::new(rates.p, rates.q, 0.0)?, seed)?;
        let mut t = flags_to_taus(&chain.qp_sites);
        t.extend(flags_to_taus(&chain.bilinear_edges));
        Ok(t)
    })?;
    let mut terms: Vec<Term> = (0..n).map(|l| site_term(lattice, l, j)).collect();
    terms.extend(lattice.edges().iter().map(|e| Term::new(vec![e.flips[0] as u32, e.flips[1] as u32], k)));
    for (t, tau) in terms.iter_mut().zip(taus) {
        t.tau = tau;
    }
    let mut meta = metadata(lattice, rates, dual_roles(0..lattice.num_plaquettes()));
    meta.beta_nishimori = Some(beta);
    Ok(SpinModel { kind: ModelKind::Combined, num_spins: lattice.num_plaquettes(), terms, metadata: meta })
}

/// Drops index pairs that coincide (s^2 = 1), keeping first-seen order.
fn cancel_pairs(spins: Vec<u32>) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(spins.len());
    for s in spins {
        if let Some(pos) = out.iter().position(|&x| x == s) {
            out.remove(pos);
        } else {
            out.push(s);
        }
    }
    out
}

/// Spins flipped by the local symmetry of the qp gauge model attached to
/// plaquette `p` and round `t`: `s^S(p,t)`, `s^S(p,t+1)` and `s^T(l,t)` for
/// the six sites `l` of `p`. Every term contains an even number of them.
pub fn gauge_qp_generator(lattice: &CodeLattice, rounds: usize, p: usize, t: usize) -> Vec<u32> {
    let np = lattice.num_plaquettes();
    let n = lattice.num_sites();
    let mut out = vec![(t * np + p) as u32, (((t + 1) % rounds) * np + p) as u32];
    out.extend(lattice.plaquette_sites(p).iter().map(|&l| (np * rounds + t * n + l) as u32));
    out
}

/// Space-time models for repeated faulty rounds, periodic in time.
///
/// QP kind: spins `s^S(p,t) = t*P + p` and `s^T(l,t) = P*T + t*N + l`. The
/// site term of `(l,t)` is `s^S` on the three plaquettes of `l` times
/// `s^T(l,t-1) s^T(l,t)` with coupling J; the measurement term of `(p,t)` is
/// the product of `s^T(l,t)` over the six sites of `p` with coupling K.
/// Rates `(p, m)` set `(J, K)` as in [`combined_couplings`].
///
/// Bilinear kind of colour c: spins `s^S(p,t)` on the colour-c plaquettes
/// and `s^T(e,t)` on the colour-c edges; edge terms
/// `s^S(pa,t) s^S(pb,t) s^T(e,t-1) s^T(e,t)` and measurement terms over the
/// star of each colour-c plaquette. Rates `(b, m)`.
///
/// All site or edge terms come first (round-major), then all measurement
/// terms. At `T = 1` the two time-like factors of a term coincide and cancel.
pub fn build_gauge_model(kind: GaugeKind, lattice: &CodeLattice, rounds: usize, disorder: &DisorderSpec) -> Result<SpinModel, CoreError> {
    if rounds < 1 {
        return Err(CoreError::NoRounds(rounds));
    }
    let rates = disorder.rates;
    let prev = |t: usize| (t + rounds - 1) % rounds;
    let np = lattice.num_plaquettes();
    match kind {
        GaugeKind::Qp => {
            let (j, k, beta) = combined_couplings(rates.p, rates.m)
                .map_err(|e| relabel(e, &[("p", "p"), ("q", "m")]))?;
            let n = lattice.num_sites();
            let s_idx = |p: usize, t: usize| (t * np + p) as u32;
            let t_idx = |l: usize, t: usize| (np * rounds + t * n + l) as u32;
            let mut terms = Vec::with_capacity((n + np) * rounds);
            for t in 0..rounds {
                for l in 0..n {
                    let mut spins: Vec<u32> = lattice.site_plaquettes(l).iter().map(|&p| s_idx(p, t)).collect();
                    spins.push(t_idx(l, prev(t)));
                    spins.push(t_idx(l, t));
                    terms.push(Term::new(cancel_pairs(spins), j));
                }
            }
            for t in 0..rounds {
                for p in 0..np {
                    terms.push(Term::new(lattice.plaquette_sites(p).iter().map(|&l| t_idx(l, t)).collect(), k));
                }
            }
            let taus = resolve(disorder, terms.len(), |seed| {
                let h = sample_history(lattice, &ErrorRates::new(rates.p, 0.0, rates.m)?, rounds, seed)?;
                let mut out: Vec<i8> = h.chains.iter().flat_map(|c| flags_to_taus(&c.qp_sites)).collect();
                out.extend(h.measurement_faults.iter().flat_map(flags_to_taus));
                Ok(out)
            })?;
            for (term, tau) in terms.iter_mut().zip(taus) {
                term.tau = tau;
            }
            let mut roles = Vec::with_capacity((np + n) * rounds);
            for round in 0..rounds {
                roles.extend((0..np).map(|plaquette| SpinRole::Spatial { plaquette, round }));
            }
            for round in 0..rounds {
                roles.extend((0..n).map(|element| SpinRole::Temporal { element, round }));
            }
            let mut meta = metadata(lattice, rates, roles);
            meta.rounds = Some(rounds);
            meta.beta_nishimori = Some(beta);
            let model = SpinModel { kind: ModelKind::GaugeQp, num_spins: (np + n) * rounds, terms, metadata: meta };
            model.validate()?;
            Ok(model)
        }
        GaugeKind::Bilinear(color) => {
            let (j, k, beta) = combined_couplings(rates.b, rates.m)
                .map_err(|e| relabel(e, &[("p", "b"), ("q", "m")]))?;
            let pc = np / 3;
            let edges: Vec<usize> = lattice.edges_of_color(color).collect();
            let ec = edges.len();
            let mut edge_pos = vec![usize::MAX; lattice.num_edges()];
            for (i, &e) in edges.iter().enumerate() {
                edge_pos[e] = i;
            }
            let s_idx = |p: usize, t: usize| (t * pc + p / 3) as u32;
            let t_idx = |e: usize, t: usize| (pc * rounds + t * ec + edge_pos[e]) as u32;
            let plaqs: Vec<usize> = lattice.plaquettes_of_color(color).collect();
            let mut terms = Vec::with_capacity((ec + pc) * rounds);
            for t in 0..rounds {
                for &e in &edges {
                    let [fa, fb] = lattice.edge(e).flips;
                    let spins = vec![s_idx(fa, t), s_idx(fb, t), t_idx(e, prev(t)), t_idx(e, t)];
                    terms.push(Term::new(cancel_pairs(spins), j));
                }
            }
            for t in 0..rounds {
                for &p in &plaqs {
                    terms.push(Term::new(lattice.plaquette_star(p).iter().map(|&e| t_idx(e, t)).collect(), k));
                }
            }
            let taus = resolve(disorder, terms.len(), |seed| {
                let h = sample_history(lattice, &ErrorRates::new(0.0, rates.b, rates.m)?, rounds, seed)?;
                let mut out: Vec<i8> = Vec::with_capacity((ec + pc) * rounds);
                for c in &h.chains {
                    out.extend(edges.iter().map(|&e| if c.bilinear_edges.get(e) { -1 } else { 1 }));
                }
                for f in &h.measurement_faults {
                    out.extend(plaqs.iter().map(|&p| if f.get(p) { -1 } else { 1 }));
                }
                Ok(out)
            })?;
            for (term, tau) in terms.iter_mut().zip(taus) {
                term.tau = tau;
            }
            let mut roles = Vec::with_capacity((pc + ec) * rounds);
            for round in 0..rounds {
                roles.extend(plaqs.iter().map(|&plaquette| SpinRole::Spatial { plaquette, round }));
            }
            for round in 0..rounds {
                roles.extend(edges.iter().map(|&element| SpinRole::Temporal { element, round }));
            }
            let mut meta = metadata(lattice, rates, roles);
            meta.color = Some(color);
            meta.rounds = Some(rounds);
            meta.beta_nishimori = Some(beta);
            let model = SpinModel { kind: ModelKind::GaugeBilinear, num_spins: (pc + ec) * rounds, terms, metadata: meta };
            model.validate()?;
            Ok(model)
        }
    }
}

fn relabel(e: CoreError, names: &[(&str, &'static str)]) -> CoreError {
    match e {
        CoreError::InvalidProbability { name, value, range } => {
            let name = names.iter().find(|(from, _)| *from == name).map_or(name, |(_, to)| *to);
            CoreError::InvalidProbability { name, value, range }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> CodeLattice {
        CodeLattice::new(2, 2).unwrap()
    }

    #[test]
    fn qp_counts_and_single_error() {
        let l = lat();
        let m = build_qp_model(&l, &DisorderSpec::clean(DisorderRates::qp(0.1))).unwrap();
        assert_eq!((m.num_spins, m.num_terms()), (12, 24));
        assert!(m.terms.iter().all(|t| t.tau == 1 && t.spins.len() == 3));
        let mut taus = vec![1i8; 24];
        taus[7] = -1;
        let m = build_qp_model(&l, &DisorderSpec::explicit(DisorderRates::qp(0.1), taus)).unwrap();
        let neg: Vec<_> = m.terms.iter().filter(|t| t.tau == -1).collect();
        assert_eq!(neg.len(), 1);
        let mut spins: Vec<usize> = neg[0].spins.iter().map(|&s| s as usize).collect();
        spins.sort_unstable();
        assert_eq!(spins, l.site_plaquettes(7).to_vec());
        assert!(matches!(
            build_qp_model(&l, &DisorderSpec::explicit(DisorderRates::qp(0.1), vec![1; 5])),
            Err(CoreError::DisorderMismatch { expected: 24, got: 5 })
        ));
    }

    #[test]
    fn bilinear_counts_and_locality() {
        let l = lat();
        let ms = build_bilinear_models(&l, &DisorderSpec::clean(DisorderRates::bilinear(0.1))).unwrap();
        for m in &ms {
            assert_eq!((m.num_spins, m.num_terms()), (4, 12));
        }
        let mut taus = vec![1i8; 36];
        taus[11] = -1;
        let ms = build_bilinear_models(&l, &DisorderSpec::explicit(DisorderRates::bilinear(0.1), taus)).unwrap();
        let hit: Vec<usize> = ms.iter().map(|m| m.terms.iter().filter(|t| t.tau == -1).count()).collect();
        assert_eq!(hit.iter().sum::<usize>(), 1);
        assert_eq!(hit[l.edge_color(11).index()], 1);
    }

    #[test]
    fn bilinear_sublattice_is_triangular() {
        let l = CodeLattice::new(4, 5).unwrap();
        for m in build_bilinear_models(&l, &DisorderSpec::clean(DisorderRates::default())).unwrap() {
            let mut nbrs = vec![std::collections::BTreeSet::new(); m.num_spins];
            for t in &m.terms {
                nbrs[t.spins[0] as usize].insert(t.spins[1]);
                nbrs[t.spins[1] as usize].insert(t.spins[0]);
            }
            assert!(nbrs.iter().all(|n| n.len() == 6));
        }
    }

    #[test]
    fn dual_bilinear_is_honeycomb() {
        let l = CodeLattice::new(3, 3).unwrap();
        for m in build_bilinear_dual_models(&l, &DisorderSpec::clean(DisorderRates::default())).unwrap() {
            assert_eq!(m.num_spins, 2 * l.num_plaquettes() / 3);
            let mut deg = vec![0; m.num_spins];
            for t in &m.terms {
                for &s in &t.spins {
                    deg[s as usize] += 1;
                }
            }
            assert!(deg.iter().all(|&d| d == 3));
        }
    }

    #[test]
    fn combined_couplings_rules() {
        let l = lat();
        let rates = DisorderRates { p: 0.2, q: 0.05, ..Default::default() };
        let m = build_combined_model(&l, &DisorderSpec::clean(rates)).unwrap();
        assert_eq!(m.num_terms(), 24 + 36);
        assert_eq!(m.terms.iter().filter(|t| t.spins.len() == 3).count(), 24);
        let (j, k, beta) = combined_couplings(0.2, 0.05).unwrap();
        assert_eq!(j, 1.0);
        assert!((beta * k - nishimori_beta(0.05).unwrap()).abs() < 1e-14);
        assert_eq!(combined_couplings(0.3, 0.3).unwrap().1, 1.0);
        assert_eq!(combined_couplings(0.3, 0.5).unwrap().1, 0.0);
        let (j, k, beta) = combined_couplings(0.5, 0.1).unwrap();
        assert_eq!((j, k), (0.0, 1.0));
        assert_eq!(beta, nishimori_beta(0.1).unwrap());
        let zero_q = DisorderRates { p: 0.1, q: 0.0, ..Default::default() };
        assert!(matches!(
            build_combined_model(&l, &DisorderSpec::clean(zero_q)),
            Err(CoreError::InvalidProbability { name: "q", .. })
        ));
    }

    #[test]
    fn gauge_qp_counts() {
        let l = lat();
        let rates = DisorderRates { p: 0.05, m: 0.05, ..Default::default() };
        let m = build_gauge_model(GaugeKind::Qp, &l, 4, &DisorderSpec::sampled(rates, 3)).unwrap();
        assert_eq!(m.num_spins, 48 + 96);
        assert_eq!(m.terms.iter().filter(|t| t.spins.len() == 5).count(), 96);
        assert_eq!(m.terms.iter().filter(|t| t.spins.len() == 6).count(), 48);
        assert!(build_gauge_model(GaugeKind::Qp, &l, 0, &DisorderSpec::clean(rates)).is_err());
    }

    #[test]
    fn gauge_qp_single_round_reduces() {
        let l = lat();
        let rates = DisorderRates { p: 0.2, m: 0.1, ..Default::default() };
        let g = build_gauge_model(GaugeKind::Qp, &l, 1, &DisorderSpec::sampled(rates, 8)).unwrap();
        let q = build_qp_model(&l, &DisorderSpec::sampled(rates, 8)).unwrap();
        assert_eq!(g.terms[..24], q.terms[..]);
    }

    #[test]
    fn gauge_qp_generator_is_symmetry() {
        let l = lat();
        let rates = DisorderRates { p: 0.1, m: 0.1, ..Default::default() };
        let rounds = 2;
        let m = build_gauge_model(GaugeKind::Qp, &l, rounds, &DisorderSpec::sampled(rates, 1)).unwrap();
        let np = l.num_plaquettes();
        let mut state: Vec<i8> = (0..m.num_spins).map(|i| if (i * 7 + 3) % 5 < 2 { -1 } else { 1 }).collect();
        let before: Vec<i8> = m.terms.iter().map(|t| t.value(&state)).collect();
        for p in 0..np {
            for t in 0..rounds {
                let flip: Vec<usize> = gauge_qp_generator(&l, rounds, p, t).into_iter().map(|i| i as usize).collect();
                for &i in &flip {
                    state[i] = -state[i];
                }
                let after: Vec<i8> = m.terms.iter().map(|t| t.value(&state)).collect();
                assert_eq!(before, after);
                for &i in &flip {
                    state[i] = -state[i];
                }
            }
        }
    }

    #[test]
    fn gauge_bilinear_arities() {
        let l = lat();
        let rates = DisorderRates { b: 0.1, m: 0.2, ..Default::default() };
        let m = build_gauge_model(GaugeKind::Bilinear(Color::B), &l, 3, &DisorderSpec::sampled(rates, 2)).unwrap();
        assert_eq!(m.num_spins, (4 + 12) * 3);
        assert_eq!(m.terms.iter().filter(|t| t.spins.len() == 4).count(), 36);
        assert_eq!(m.terms.iter().filter(|t| t.spins.len() == 6).count(), 12);
        let m1 = build_gauge_model(GaugeKind::Bilinear(Color::B), &l, 1, &DisorderSpec::clean(rates)).unwrap();
        assert!(m1.terms[..12].iter().all(|t| t.spins.len() == 2));
    }

    #[test]
    fn model_json_round_trip() {
        let l = lat();
        let rates = DisorderRates { p: 0.13, q: 0.07, ..Default::default() };
        let m = build_combined_model(&l, &DisorderSpec::sampled(rates, 99)).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["V"], 12);
        assert_eq!(v["kind"], "combined");
        let back: SpinModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
