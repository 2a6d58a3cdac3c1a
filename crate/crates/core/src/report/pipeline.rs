//! Pipeline stages behind the command-line runner. Each stage reads the
//! config, writes its files through an [`ArtifactWriter`] and records failed
//! invariants there instead of returning an error.

use super::artifacts::ArtifactWriter;
use super::config::ExperimentConfig;
use super::criteria::{geometry_constants, run_criterion};
use super::svg::{self, Layer, Shape};
use crate::cellset::CellSet;
use crate::core_tentacle::{coarse_core_included, decompose, CoreTentacleDecomposition};
use crate::error::{Error, Result};
use crate::gallery::Fixture;
use crate::grid::GridDomain;
use crate::properties::{check_geodesic_tail_diameter, pair_data, sample_pairs};
use crate::quasihyperbolic::{estimate_delta, radial_tree};
use crate::sobolev_approx::{error_decay, singular_exponent, Field, FieldSum, PowerSingularity, Wave};
use crate::uniformization::{build_deformation, check_bilipschitz, check_deformed_uniformity};
use crate::whitney::{whitney_decompose, WhitneyDecomposition};
use serde::Serialize;

pub const STAGES: [&str; 5] = ["gallery", "metrics", "properties", "decompose", "approx"];

fn bounds(dom: &GridDomain) -> [f64; 4] {
    let o = dom.origin();
    [o[0], o[0] + dom.nx() as f64 * dom.h(), o[1], o[1] + dom.ny() as f64 * dom.h()]
}

fn cube_rect(dom: &GridDomain, dec: &WhitneyDecomposition, q: usize, fill: String) -> Shape {
    let c = &dec.cubes[q];
    let o = dom.origin();
    let lo = [o[0] + c.i0 as f64 * dom.h(), o[1] + c.j0 as f64 * dom.h()];
    Shape::Rect { lo, hi: [lo[0] + c.l, lo[1] + c.l], fill, stroke: "#333".into() }
}

/// Cells as horizontal runs, one rectangle per run.
fn cell_runs(dom: &GridDomain, cells: &CellSet, fill: &str) -> Vec<Shape> {
    let mut out = Vec::new();
    let (o, h) = (dom.origin(), dom.h());
    let mut run: Option<(usize, usize, usize)> = None;
    for c in cells.iter() {
        let (i, j) = dom.ij(c);
        run = match run {
            Some((j0, a, b)) if j0 == j && b + 1 == i => Some((j0, a, i)),
            prev => {
                if let Some((j0, a, b)) = prev {
                    out.push(Shape::Rect { lo: [o[0] + a as f64 * h, o[1] + j0 as f64 * h], hi: [o[0] + (b + 1) as f64 * h, o[1] + (j0 + 1) as f64 * h], fill: fill.into(), stroke: "none".into() });
                }
                Some((j, i, i))
            }
        };
    }
    if let Some((j0, a, b)) = run {
        out.push(Shape::Rect { lo: [o[0] + a as f64 * h, o[1] + j0 as f64 * h], hi: [o[0] + (b + 1) as f64 * h, o[1] + (j0 + 1) as f64 * h], fill: fill.into(), stroke: "none".into() });
    }
    out
}

fn header(cfg: &ExperimentConfig, what: &str) -> String {
    format!("qhgeom {what}: fixture {} h 1/{} seed {}", cfg.fixture.name, cfg.fixture.resolution, cfg.sampling.seed)
}

fn svg_file(w: &mut ArtifactWriter, name: &str, cfg: &ExperimentConfig, b: [f64; 4], layers: &[Layer]) -> Result<()> {
    let text = svg::render(b, layers, &header(cfg, name), svg::now());
    w.write(name, text.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct CubeRow {
    id: usize,
    i0: usize,
    j0: usize,
    side: usize,
    l: f64,
    dist: f64,
    flagged: bool,
}

#[derive(Serialize)]
struct DomainInfo<'a> {
    name: &'a str,
    nx: usize,
    ny: usize,
    h: f64,
    interior_cells: usize,
    x0: [f64; 2],
    cubes: usize,
    flagged: usize,
    inadmissible: usize,
}

/// Domain raster and Whitney cubes.
pub fn stage_gallery(cfg: &ExperimentConfig, fx: &Fixture, dec: &WhitneyDecomposition, w: &mut ArtifactWriter) -> Result<()> {
    let dom = &fx.domain;
    let bad: Vec<usize> = (0..dec.cubes.len()).filter(|&q| !dec.cubes[q].flagged && !dec.cubes[q].admissible()).collect();
    for &q in bad.iter().take(20) {
        let c = &dec.cubes[q];
        w.fail("whitney admissibility", format!("cube {q} at ({}, {}) side {}: diam {} dist {}", c.i0, c.j0, c.side, c.diam(), c.dist), cfg.sampling.seed);
    }
    w.json(
        "domain.json",
        &DomainInfo {
            name: &fx.name,
            nx: dom.nx(),
            ny: dom.ny(),
            h: dom.h(),
            interior_cells: dom.interior_count(),
            x0: dom.center(dom.x0()),
            cubes: dec.cubes.len(),
            flagged: dec.flagged_count(),
            inadmissible: bad.len(),
        },
    )?;
    let rows: Vec<CubeRow> =
        dec.cubes.iter().enumerate().map(|(id, c)| CubeRow { id, i0: c.i0, j0: c.j0, side: c.side, l: c.l, dist: c.dist, flagged: c.flagged }).collect();
    w.csv("whitney.csv", &rows)?;
    let top = dec.cubes.iter().map(|c| c.scale).max().unwrap_or(0).max(1) as f64;
    let mut layer = Layer::new("whitney");
    layer.shapes = (0..dec.cubes.len()).map(|q| cube_rect(dom, dec, q, svg::ramp(dec.cubes[q].scale as f64 / top))).collect();
    svg_file(w, "whitney.svg", cfg, bounds(dom), &[layer])
}

#[derive(Serialize)]
struct PairRow {
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
    k: f64,
    lambda: f64,
    log_lambda_bound: f64,
    log_ratio_bound: f64,
}

/// Quasihyperbolic distances of sampled pairs, their lower bounds and the
/// thin-triangle estimate.
pub fn stage_metrics(cfg: &ExperimentConfig, fx: &Fixture, w: &mut ArtifactWriter) -> Result<()> {
    let dom = &fx.domain;
    let seed = cfg.sampling.seed;
    let samples = pair_data(dom, &sample_pairs(dom, cfg.sampling.pairs, seed, 0.0), false);
    let mut rows = Vec::with_capacity(samples.len());
    for s in &samples {
        let (dx, dy) = (dom.d(s.x), dom.d(s.y));
        let ([x1, x2], [y1, y2]) = (dom.center(s.x), dom.center(s.y));
        let row = PairRow {
            x1,
            x2,
            y1,
            y2,
            k: s.k,
            lambda: s.lambda,
            log_lambda_bound: (s.lambda / dx.min(dy)).ln_1p(),
            log_ratio_bound: (dx / dy).ln().abs(),
        };
        if row.k < 0.98 * row.log_lambda_bound.max(row.log_ratio_bound) {
            w.fail("qh lower bounds", format!("pair ({x1}, {x2}) ({y1}, {y2}): k {} below bound", row.k), seed);
        }
        rows.push(row);
    }
    w.csv("pairs.csv", &rows)?;
    let delta = estimate_delta(dom, cfg.sampling.triangles, seed)?;
    w.json("delta.json", &delta)?;
    let mut layers = vec![Layer::new("domain")];
    layers[0].shapes = cell_runs(dom, &CellSet::from_cells(dom.nx(), dom.interior_cells()), "#e8e8e8");
    if let Some([a, b, c]) = delta.triangle {
        let mut tri = Layer::new("delta_triangle");
        let mut search = crate::search::Search::new(dom.len());
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let geo = crate::quasihyperbolic::qh_geodesics_from(dom, &mut search, p, &[q]);
            let pts = geo.first().map(|g| g.1.iter().map(|&v| dom.center(v)).collect()).unwrap_or_default();
            tri.shapes.push(Shape::Polyline { points: pts, stroke: "#c03020".into(), width: 1.5 });
        }
        layers.push(tri);
    }
    svg_file(w, "metrics.svg", cfg, bounds(dom), &layers)
}

#[derive(Serialize)]
struct PropertySummary {
    separation: f64,
    length_gh: f64,
    diameter_gh: f64,
    tail_diameter: f64,
    eps: f64,
    bilipschitz: f64,
    deformed_uniformity: f64,
    deformation: crate::uniformization::DeformationSummary,
}

/// Ball separation, Gehring–Hayman and tail constants, and the deformed
/// metric at the configured `eps`.
pub fn stage_properties(cfg: &ExperimentConfig, fx: &Fixture, w: &mut ArtifactWriter) -> Result<()> {
    let dom = &fx.domain;
    let seed = cfg.sampling.seed;
    let g = geometry_constants(dom, cfg.sampling.pairs, seed);
    let samples = pair_data(dom, &sample_pairs(dom, cfg.sampling.pairs, seed, 0.02), true);
    let tail = check_geodesic_tail_diameter(dom, &samples, 2f64.ln() * 1.05, None, seed);
    let tree = radial_tree(dom);
    let m = build_deformation(dom, &tree, cfg.geometry.eps)?;
    let pairs = sample_pairs(dom, cfg.sampling.pairs, seed, 0.02);
    let bl = check_bilipschitz(dom, &m, &pairs, None, seed);
    let uni = check_deformed_uniformity(dom, &m, &pairs, None, seed);
    let out = PropertySummary {
        separation: g.separation,
        length_gh: g.length_gh,
        diameter_gh: g.diameter_gh,
        tail_diameter: tail.constant,
        eps: cfg.geometry.eps,
        bilipschitz: bl.constant,
        deformed_uniformity: uni.constant,
        deformation: m.summary(dom),
    };
    for (name, v) in [("length GH", out.length_gh), ("diameter GH", out.diameter_gh), ("bilipschitz", out.bilipschitz), ("deformed uniformity", out.deformed_uniformity)] {
        if !v.is_finite() {
            w.fail(name, "constant is not finite", seed);
        }
    }
    w.json("properties.json", &out)?;
    Ok(())
}

fn decomposition_layers(dom: &GridDomain, dec: &WhitneyDecomposition, ctd: &CoreTentacleDecomposition) -> Vec<Layer> {
    let mut domain = Layer::new("domain");
    domain.shapes = cell_runs(dom, &CellSet::from_cells(dom.nx(), dom.interior_cells()), "#f0f0f0");
    let mut core = Layer::new("core");
    core.shapes = cell_runs(dom, &ctd.core.cells, "#9fc5e8");
    let mut p = Layer::new("P_m");
    p.shapes = ctd.p.iter().map(|&q| cube_rect(dom, dec, q, "#f6b26b".into())).collect();
    let mut tentacles = Layer::new("B_i");
    let n = ctd.tentacles.len().max(1) as f64;
    for (t, &i) in ctd.tentacles.iter().enumerate() {
        tentacles.shapes.extend(cell_runs(dom, &ctd.pieces[i].cells, &svg::ramp(t as f64 / n)));
    }
    vec![domain, core, p, tentacles]
}

/// Core/tentacle decomposition at every configured level.
pub fn stage_decompose(cfg: &ExperimentConfig, fx: &Fixture, dec: &WhitneyDecomposition, w: &mut ArtifactWriter) -> Result<()> {
    let dom = &fx.domain;
    let seed = cfg.sampling.seed;
    let mut summaries = Vec::new();
    let mut skipped = Vec::new();
    for &m in &cfg.geometry.levels {
        let ctd = match decompose(dom, dec, m, cfg.geometry.c0) {
            Ok(c) => c,
            Err(Error::Level(msg)) => {
                skipped.push((m, msg));
                continue;
            }
            Err(e) => return Err(e),
        };
        let s = ctd.summary(dom);
        if s.overlap_min < 1 {
            w.fail("bounded overlap", format!("m = {m}: a cell lies in no piece"), seed);
        }
        if !ctd.tiles(dom) {
            w.fail("tiling", format!("m = {m}: pieces do not tile the domain"), seed);
        }
        if coarse_core_included(dom, dec, &ctd) == Some(false) {
            w.fail("coarse core inclusion", format!("m = {m}"), seed);
        }
        svg_file(w, &format!("decompose_m{m}.svg"), cfg, bounds(dom), &decomposition_layers(dom, dec, &ctd))?;
        summaries.push(s);
    }
    #[derive(Serialize)]
    struct Out {
        c0: f64,
        levels: Vec<crate::core_tentacle::DecompositionSummary>,
        skipped: Vec<(u32, String)>,
    }
    w.json("decompose.json", &Out { c0: cfg.geometry.c0, levels: summaries, skipped })?;
    Ok(())
}

/// `|x - b|^s` with `s` just inside the admissible window for every
/// configured exponent, plus a wave background.
pub fn approx_field(cfg: &ExperimentConfig, b: [f64; 2]) -> Box<dyn Field> {
    let pmax = cfg.approx.p.iter().copied().fold(1.0, f64::max);
    let sing = PowerSingularity { b, s: singular_exponent(cfg.approx.k, pmax) };
    Box::new(FieldSum(vec![Box::new(sing), Box::new(Wave { amp: 1.0, w: [1.0, 2.0], phase: 0.0 })]))
}

#[derive(Serialize)]
struct DecayCsvRow {
    m: u32,
    p: f64,
    error: f64,
    tail: f64,
    ratio: f64,
    sup_um: f64,
    sup_u: f64,
}

/// Error decay of the smooth approximant over the configured levels.
pub fn stage_approx(cfg: &ExperimentConfig, fx: &Fixture, dec: &WhitneyDecomposition, w: &mut ArtifactWriter) -> Result<()> {
    let dom = &fx.domain;
    let seed = cfg.sampling.seed;
    let field = approx_field(cfg, fx.boundary_point);
    let sweep = error_decay(dom, dec, field.as_ref(), cfg.approx.k, &cfg.approx.p, &cfg.geometry.levels, cfg.geometry.c0)?;
    let mut rows = Vec::new();
    for d in &sweep.decay {
        for r in &d.rows {
            let rep = sweep.reports.iter().find(|x| x.m == r.m).expect("row from a report");
            rows.push(DecayCsvRow {
                m: r.m,
                p: d.p,
                error: r.error,
                tail: r.tail,
                ratio: r.ratio,
                sup_um: rep.sup_um.iter().copied().fold(0.0, f64::max),
                sup_u: rep.sup_u.iter().copied().fold(0.0, f64::max),
            });
        }
    }
    for r in &sweep.reports {
        if r.sum_deviation > 1e-12 {
            w.fail("partition sum", format!("m = {}: |Σ - 1| = {:e}", r.m, r.sum_deviation), seed);
        }
        if r.moment_residual > 1e-10 {
            w.fail("moment conditions", format!("m = {}: residual {:e}", r.m, r.moment_residual), seed);
        }
        if r.sup_um.iter().any(|v| !v.is_finite()) {
            w.fail("bounded derivatives", format!("m = {}", r.m), seed);
        }
    }
    w.csv("decay.csv", &rows)?;
    w.json("approx.json", &sweep)?;
    let layers = decay_plot(&sweep.decay);
    let b = decay_bounds(&sweep.decay);
    svg_file(w, "decay.svg", cfg, b, &layers)
}

fn decay_bounds(decay: &[crate::sobolev_approx::DecayReport]) -> [f64; 4] {
    let rows = decay.iter().flat_map(|d| d.rows.iter());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut m0, mut m1) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows.filter(|r| r.error > 0.0) {
        lo = lo.min(r.error.log2());
        hi = hi.max(r.error.log2());
        m0 = m0.min(r.m as f64);
        m1 = m1.max(r.m as f64);
    }
    if !lo.is_finite() {
        return [0.0, 1.0, 0.0, 1.0];
    }
    [m0 - 0.5, m1 + 0.5, lo - 1.0, hi + 1.0]
}

/// `log2 error` against `m`, one polyline per exponent.
fn decay_plot(decay: &[crate::sobolev_approx::DecayReport]) -> Vec<Layer> {
    let n = decay.len().max(1) as f64;
    decay
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut l = Layer::new(&format!("p={}", d.p));
            let pts: Vec<[f64; 2]> = d.rows.iter().filter(|r| r.error > 0.0).map(|r| [r.m as f64, r.error.log2()]).collect();
            let colour = svg::ramp(i as f64 / n);
            for &p in &pts {
                l.shapes.push(Shape::Circle { center: p, r: 0.05, fill: colour.clone() });
            }
            l.shapes.push(Shape::Polyline { points: pts, stroke: colour, width: 1.5 });
            l
        })
        .collect()
}

/// Builds the fixture and its Whitney cubes, then runs the named stages in
/// pipeline order.
pub fn run_stages(cfg: &ExperimentConfig, stages: &[&str], w: &mut ArtifactWriter) -> Result<()> {
    let fx = cfg.fixture()?;
    let dec = whitney_decompose(&fx.domain)?;
    for s in STAGES.iter().filter(|s| stages.contains(s)) {
        match *s {
            "gallery" => stage_gallery(cfg, &fx, &dec, w)?,
            "metrics" => stage_metrics(cfg, &fx, w)?,
            "properties" => stage_properties(cfg, &fx, w)?,
            "decompose" => stage_decompose(cfg, &fx, &dec, w)?,
            "approx" => stage_approx(cfg, &fx, &dec, w)?,
            _ => unreachable!(),
        }
    }
    Ok(())
}

/// Runs acceptance criterion `id` and records its failed checks.
pub fn run_acceptance(id: u32, seed: u64, w: &mut ArtifactWriter) -> Result<super::criteria::CriterionReport> {
    let r = run_criterion(id, seed)?;
    w.json(&format!("criterion_{id}.json"), &r)?;
    for c in r.failed() {
        w.fail(&format!("criterion {id}: {}", c.name), format!("value {} bound {} {}", c.value, c.bound, c.detail), seed);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::artifacts::Manifest;

    fn writer(tag: &str, cfg: &ExperimentConfig) -> ArtifactWriter {
        let dir = std::env::temp_dir().join(format!("qhgeom-pipeline-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let m = Manifest { command: tag.into(), fixture: cfg.fixture.name.clone(), h: cfg.h(), k: cfg.approx.k, p: cfg.approx.p.clone(), seed: cfg.sampling.seed, files: vec![], failures: vec![] };
        ArtifactWriter::new(&dir, m).unwrap()
    }

    #[test]
    fn decomposition_svg_has_one_group_per_family() {
        let mut cfg = ExperimentConfig::default();
        cfg.fixture.name = "slit_disk".into();
        cfg.fixture.resolution = 64;
        cfg.geometry.levels = vec![6];
        let mut w = writer("decompose", &cfg);
        run_stages(&cfg, &["decompose"], &mut w).unwrap();
        let text = std::fs::read_to_string(w.dir().join("decompose_m6.svg")).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let ids: Vec<_> = doc.root_element().children().filter(|n| n.has_tag_name("g")).map(|g| g.attribute("id").unwrap().to_string()).collect();
        assert_eq!(ids, ["domain", "core", "P_m", "B_i"]);
        let dir = w.dir().to_path_buf();
        let m = w.finish().unwrap();
        assert!(m.failures.is_empty(), "{:?}", m.failures);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn delta_triangle_overlay_parses_back() {
        let mut cfg = ExperimentConfig::default();
        cfg.fixture.resolution = 32;
        cfg.sampling.pairs = 20;
        cfg.sampling.triangles = 10;
        let mut w = writer("metrics", &cfg);
        run_stages(&cfg, &["metrics"], &mut w).unwrap();
        let text = std::fs::read_to_string(w.dir().join("metrics.svg")).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let tri = doc.descendants().find(|n| n.attribute("id") == Some("delta_triangle")).unwrap();
        let sides: Vec<_> = tri.children().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(sides.len(), 3);
        // Consecutive sides share their endpoints.
        let ends = |n: &roxmltree::Node| {
            let pts: Vec<&str> = n.attribute("points").unwrap().split(' ').collect();
            (pts[0].to_string(), pts[pts.len() - 1].to_string())
        };
        for i in 0..3 {
            assert_eq!(ends(&sides[i]).1, ends(&sides[(i + 1) % 3]).0);
        }
        let dir = w.dir().to_path_buf();
        w.finish().unwrap();
        std::fs::remove_dir_all(dir).unwrap();
    }
}
