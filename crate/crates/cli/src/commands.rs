use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};
use skylaw::cola::{self, Constitution, ObjectiveSource, Scope};
use skylaw::geo::{load_geojson, path_from_geojson, path_to_geojson, FeatureMap, GeoFeature};
use skylaw::inference::{probability_field_for, MissionSetting, Query};
use skylaw::mission::{
    explain, explanation_csv, explanation_text, optimize_setting, rejection_area, rejection_csv,
    ProbabilityOracle,
};
use skylaw::objectives::{
    build_noise_grid, build_radio_grid, build_risk_grid, compliance_cost_grid, format_number,
    resample_path, resample_polyline, GridSpec2D, ScalarGrid3D,
};
use skylaw::router::{
    evolve, extreme_points, knee_point, pareto_csv, seed_curves_masked, ParetoRow, RouteObjective,
};
use skylaw::starmap::StarMap;

use crate::config::MissionConfig;
use crate::plots;
use crate::{Cli, Command, Inputs, PathInputs};

const GRANTED: u8 = 0;
const DENIED: u8 = 1;
const INPUT_ERROR: u8 = 2;
const INFEASIBLE: u8 = 3;

/// Thresholds sampled for rejection curves.
const CURVE_SAMPLES: usize = 1001;

/// Maps an error chain to the process exit code.
pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    let infeasible = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<skylaw::Error>(),
            Some(skylaw::Error::Unreachable)
        )
    });
    if infeasible {
        INFEASIBLE
    } else {
        INPUT_ERROR
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let mut cfg = match &cli.config {
        Some(p) => MissionConfig::load(p)?,
        None => MissionConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out = cli.output;
    match cli.command {
        Command::BuildStarmap { map, constitution } => {
            build_starmap(&cfg, &map, &constitution, &out_or(out, "starmap"))
        }
        Command::InferField {
            inputs,
            objective,
            setting,
        } => infer_field(
            &cfg,
            &inputs,
            objective,
            &setting.setting,
            &out_or(out, "probability.grid3"),
        ),
        Command::Route {
            inputs,
            map,
            start,
            goal,
            setting,
        } => route(
            &cfg,
            &inputs,
            map.as_deref(),
            start,
            goal,
            &setting.setting,
            &out_or(out, "route"),
        ),
        Command::Clearance { path, setting } => {
            clearance(&cfg, &path, &setting.setting, out.as_deref())
        }
        Command::Explain { path } => explain_cmd(&cfg, &path, out.as_deref()),
        Command::Optimize { path, allow } => optimize(
            &cfg,
            cli.config.as_deref(),
            &path,
            &allow,
            &out_or(out, "optimized.toml"),
        ),
        Command::ExportPlots {
            grid,
            altitudes,
            curve,
            path,
        } => export_plots(
            &cfg,
            grid.as_deref(),
            &altitudes,
            &curve,
            &path,
            &out_or(out, "plots"),
        ),
    }
}

fn out_or(out: Option<PathBuf>, default: &str) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(default))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_constitution(path: &Path) -> Result<Constitution> {
    let text = read(path)?;
    cola::parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn load_map(path: &Path, cfg: &MissionConfig) -> Result<FeatureMap> {
    let loaded = load_geojson(&read(path)?, Some(cfg.bounds()))
        .with_context(|| format!("loading {}", path.display()))?;
    if loaded.untagged_dropped > 0 || loaded.outside_dropped > 0 {
        eprintln!(
            "warning: dropped {} untagged and {} out-of-bounds features from {}",
            loaded.untagged_dropped,
            loaded.outside_dropped,
            path.display()
        );
    }
    let o = loaded.map.origin();
    let c = cfg.origin();
    if (o.lat - c.lat).abs() > 1e-9 || (o.lon - c.lon).abs() > 1e-9 {
        bail!(
            "map origin ({}, {}) differs from the configured origin ({}, {})",
            o.lat,
            o.lon,
            c.lat,
            c.lon
        );
    }
    Ok(loaded.map)
}

/// Loads the constitution and relational map and checks they fit together.
fn load_inputs(inputs: &Inputs) -> Result<(Constitution, StarMap)> {
    let c = load_constitution(&inputs.constitution)?;
    let sm = StarMap::load(&inputs.starmap)
        .with_context(|| format!("loading relational map {}", inputs.starmap.display()))?;
    let diagnostics = cola::validate(&c, &sm);
    if !diagnostics.is_empty() {
        let mut msg = format!("{} is not usable:", inputs.constitution.display());
        for d in diagnostics {
            let _ = write!(msg, "\n  {d}");
        }
        bail!(msg);
    }
    Ok((c, sm))
}

fn active_setting(
    c: &Constitution,
    cfg: &MissionConfig,
    choice: &[String],
) -> Result<MissionSetting> {
    let chosen = if choice.is_empty() {
        &cfg.setting
    } else {
        choice
    };
    if chosen.is_empty() {
        Ok(MissionSetting::first(c))
    } else {
        Ok(MissionSetting::new(c, chosen)?)
    }
}

fn build_starmap(cfg: &MissionConfig, map: &Path, constitution: &Path, out: &Path) -> Result<u8> {
    let c = load_constitution(constitution)?;
    let fm = load_map(map, cfg)?;
    let relations: Vec<_> = c.relations().into_iter().collect();
    let bounds = cfg.bounds();
    let grid = GridSpec2D::covering(bounds.easting, bounds.northing, [cfg.x_res, cfg.y_res])?;
    let sm = StarMap::build(&fm, &cfg.perturbation()?, &relations, grid, cfg.seed)?;
    sm.save(out)?;
    println!("wrote {} layers to {}", relations.len(), out.display());
    Ok(GRANTED)
}

fn infer_field(
    cfg: &MissionConfig,
    inputs: &Inputs,
    objective: Option<String>,
    choice: &[String],
    out: &Path,
) -> Result<u8> {
    let (c, sm) = load_inputs(inputs)?;
    let setting = active_setting(&c, cfg, choice)?;
    let query = objective.map_or(Query::AllLogicObjectives, Query::Named);
    let field = probability_field_for(&c, &sm, &cfg.grid()?, &setting, &query, cfg.bit_limit)?;
    write(out, field.to_text())?;
    let (lo, hi) = field.min_max();
    println!(
        "setting: {setting}\nprobability range: [{lo}, {hi}]\nwrote {}",
        out.display()
    );
    Ok(GRANTED)
}

fn tower_positions(map: &FeatureMap, tag: &str) -> Vec<[f64; 2]> {
    map.features_with_tag(tag)
        .map(GeoFeature::centroid)
        .collect()
}

/// Objective evaluators in declaration order, plus the probability field
/// of all logic field objectives under `setting`.
fn build_objectives(
    cfg: &MissionConfig,
    c: &Constitution,
    sm: &StarMap,
    map: Option<&FeatureMap>,
    setting: &MissionSetting,
) -> Result<(Vec<RouteObjective>, ScalarGrid3D)> {
    let spec = cfg.grid()?;
    let need_map =
        |name: &str| map.ok_or_else(|| anyhow!("objective `{name}` needs the map; pass --map"));
    let mut objectives = Vec::new();
    let mut logic_fields = Vec::new();
    for o in &c.objectives {
        let name = o.name.as_str();
        let objective = match (o.scope, &o.source) {
            (Scope::Field, ObjectiveSource::Model(_)) => {
                let grid = match cfg.model_for(name) {
                    "radio" => {
                        let towers = tower_positions(need_map(name)?, &cfg.radio_tag);
                        if towers.is_empty() {
                            bail!("radio model found no `{}` features in the map", cfg.radio_tag);
                        }
                        build_radio_grid(&towers, &spec, cfg.radio())?
                    }
                    "noise" => build_noise_grid(need_map(name)?, &spec)?,
                    "risk" => build_risk_grid(need_map(name)?, &spec)?,
                    "energy" => bail!("`energy` is a path model and cannot back field objective `{name}`"),
                    other => bail!("field objective `{name}` has no built-in model (bind it with model_bindings, got `{other}`)"),
                };
                RouteObjective::grid(name, Arc::new(grid))
            }
            (Scope::Field, _) => {
                let prob = probability_field_for(
                    c,
                    sm,
                    &spec,
                    setting,
                    &Query::Named(name.to_owned()),
                    cfg.bit_limit,
                )?;
                let cost = compliance_cost_grid(&prob)?;
                logic_fields.push(prob);
                RouteObjective::grid(name, Arc::new(cost))
            }
            (Scope::Path, ObjectiveSource::Model(_)) => match cfg.model_for(name) {
                "energy" => RouteObjective::energy(name, cfg.uav()),
                other => {
                    bail!("path objective `{name}` has no built-in path model (got `{other}`)")
                }
            },
            (Scope::Path, _) => bail!(
                "logic path objective `{name}` is not supported; declare it as a field objective"
            ),
        };
        objectives.push(objective);
    }
    let field = if logic_fields.len() == 1 {
        logic_fields.pop().expect("one field")
    } else {
        probability_field_for(
            c,
            sm,
            &spec,
            setting,
            &Query::AllLogicObjectives,
            cfg.bit_limit,
        )?
    };
    Ok((objectives, field))
}

#[allow(clippy::too_many_arguments)]
fn route(
    cfg: &MissionConfig,
    inputs: &Inputs,
    map_path: Option<&Path>,
    start: [f64; 3],
    goal: [f64; 3],
    choice: &[String],
    out: &Path,
) -> Result<u8> {
    let (c, sm) = load_inputs(inputs)?;
    let setting = active_setting(&c, cfg, choice)?;
    let spec = cfg.grid()?;
    for (name, p) in [("start", start), ("goal", goal)] {
        if !spec.contains(p) {
            bail!(
                "{name} ({}, {}, {}) lies outside the navigation bounds",
                p[0],
                p[1],
                p[2]
            );
        }
    }
    if start == goal {
        bail!("start and goal coincide");
    }
    let map = map_path.map(|p| load_map(p, cfg)).transpose()?;
    let (objectives, field) = build_objectives(cfg, &c, &sm, map.as_ref(), &setting)?;
    let grids: Vec<&ScalarGrid3D> = objectives
        .iter()
        .filter_map(|o| match &o.evaluator {
            skylaw::router::Evaluator::Grid(g) => Some(g.as_ref()),
            skylaw::router::Evaluator::Energy(_) => None,
        })
        .collect();
    if grids.is_empty() {
        bail!("routing needs at least one field objective");
    }
    let blocked: Vec<bool> = match cfg.seed_min_probability {
        Some(floor) => field.values().iter().map(|&p| p < floor).collect(),
        None => Vec::new(),
    };
    let curves = seed_curves_masked(&grids, cfg.n_s, start, goal, cfg.epsilon(), &blocked)?;
    let front = evolve(&curves, &objectives, &cfg.evolve())?;

    let oracle = ProbabilityOracle::new(&c, &sm).with_bit_limit(cfg.bit_limit);
    let names: Vec<String> = objectives.iter().map(|o| o.name.clone()).collect();
    let vectors = front.objectives();
    let knee = knee_point(&vectors).ok_or_else(|| anyhow!("evolution returned an empty front"))?;
    let extremes = extreme_points(&vectors);

    let mut rows = Vec::new();
    let mut scores = Vec::new();
    let mut clearance_table = String::from("member,score,granted\n");
    for (id, member) in front.members.iter().enumerate() {
        let waypoints = resample_path(&front.curve(id), cfg.waypoint_resolution)?;
        let report = oracle.clearance(&waypoints, &setting, cfg.clearance_threshold)?;
        let mut roles = Vec::new();
        if id == knee {
            roles.push("knee".to_owned());
        }
        for (m, &e) in extremes.iter().enumerate() {
            if e == id {
                roles.push(format!("extreme:{}", names[m]));
            }
        }
        let objective_values: serde_json::Map<String, Value> = names
            .iter()
            .cloned()
            .zip(member.objectives.iter().map(|v| json!(v)))
            .collect();
        let file = format!("paths/member_{id}.geojson");
        let doc = path_to_geojson(
            &waypoints,
            sm.origin,
            Some(&report.probabilities),
            &[
                ("member", json!(id)),
                ("objectives", Value::Object(objective_values)),
                ("clearance_score", json!(report.score)),
                ("granted", json!(report.granted)),
                ("setting", json!(setting.choices())),
                ("roles", json!(roles)),
                ("n_p", json!(member.n_p())),
            ],
        );
        write(&out.join(&file), doc)?;
        let _ = writeln!(
            clearance_table,
            "{id},{},{}",
            format_number(report.score),
            report.granted
        );
        scores.push(report.score);
        rows.push(ParetoRow {
            id,
            objectives: member.objectives.clone(),
            n_p: member.n_p(),
            path_file: file,
        });
    }
    write(&out.join("pareto.csv"), pareto_csv(&names, &rows))?;
    write(&out.join("clearance.csv"), clearance_table)?;
    let mut selection = format!("role,member\nknee,{knee}\n");
    for (m, e) in extremes.iter().enumerate() {
        let _ = writeln!(selection, "extreme:{},{e}", names[m]);
    }
    write(&out.join("selection.csv"), selection)?;
    let (curve, area) = rejection_area(&scores, CURVE_SAMPLES)?;
    write(&out.join("rejection.csv"), rejection_csv(&curve))?;
    write(&out.join("probability.grid3"), field.to_text())?;

    println!("setting: {setting}");
    println!("seed paths: {}", curves.len());
    println!("pareto front: {} members", front.len());
    println!("knee: member {knee}, clearance {:.6}", scores[knee]);
    println!("rejection area: {area:.6}");
    println!("wrote {}", out.display());
    Ok(GRANTED)
}

fn load_path(p: &PathInputs, sm: &StarMap, cfg: &MissionConfig) -> Result<Vec<[f64; 3]>> {
    let points = path_from_geojson(&read(&p.path)?, Some(sm.origin))
        .with_context(|| format!("reading path {}", p.path.display()))?;
    if points.is_empty() {
        bail!("{} holds an empty path", p.path.display());
    }
    if p.resample {
        Ok(resample_polyline(&points, cfg.waypoint_resolution)?.into_inner())
    } else {
        Ok(points)
    }
}

fn clearance(
    cfg: &MissionConfig,
    p: &PathInputs,
    choice: &[String],
    out: Option<&Path>,
) -> Result<u8> {
    let (c, sm) = load_inputs(&p.inputs)?;
    let setting = active_setting(&c, cfg, choice)?;
    let path = load_path(p, &sm, cfg)?;
    let oracle = ProbabilityOracle::new(&c, &sm).with_bit_limit(cfg.bit_limit);
    let report = oracle.clearance(&path, &setting, cfg.clearance_threshold)?;
    if let Some(out) = out {
        let mut csv = String::from("index,x,y,z,probability\n");
        for (i, (q, pr)) in path.iter().zip(&report.probabilities).enumerate() {
            let _ = writeln!(csv, "{i},{},{},{},{}", q[0], q[1], q[2], format_number(*pr));
        }
        write(out, csv)?;
    }
    let verdict = if report.granted { "granted" } else { "denied" };
    println!("setting: {setting}");
    println!("waypoints: {}", path.len());
    println!("clearance: {}", report.score);
    println!("threshold: {}", report.threshold);
    println!("verdict: {verdict}");
    Ok(if report.granted { GRANTED } else { DENIED })
}

fn explain_cmd(cfg: &MissionConfig, p: &PathInputs, out: Option<&Path>) -> Result<u8> {
    let (c, sm) = load_inputs(&p.inputs)?;
    let path = load_path(p, &sm, cfg)?;
    let oracle = ProbabilityOracle::new(&c, &sm).with_bit_limit(cfg.bit_limit);
    let report = explain(&oracle, &path, cfg.explain_limit)?;
    print!("{}", explanation_text(&c, &report, cfg.clearance_threshold));
    if let Some(out) = out {
        write(out, explanation_csv(&c, &report, cfg.clearance_threshold))?;
    }
    Ok(GRANTED)
}

fn optimize(
    cfg: &MissionConfig,
    config_path: Option<&Path>,
    p: &PathInputs,
    allow: &[String],
    out: &Path,
) -> Result<u8> {
    let (c, sm) = load_inputs(&p.inputs)?;
    let path = load_path(p, &sm, cfg)?;
    let allowed = if allow.is_empty() {
        None
    } else {
        if let Some(o) = allow.iter().find(|o| !c.is_parameter(o)) {
            bail!("`{o}` is not a declared parameter option");
        }
        Some(
            c.parameter_groups
                .iter()
                .map(|g| {
                    let picked: Vec<String> = g
                        .options
                        .iter()
                        .filter(|o| allow.contains(o))
                        .cloned()
                        .collect();
                    if picked.is_empty() {
                        g.options.clone()
                    } else {
                        picked
                    }
                })
                .collect::<Vec<_>>(),
        )
    };
    let oracle = ProbabilityOracle::new(&c, &sm).with_bit_limit(cfg.bit_limit);
    let (best, score) = optimize_setting(&oracle, &path, allowed.as_deref(), cfg.explain_limit)?;
    let mut updated = cfg.clone();
    updated.setting = best.choices().to_vec();
    write(out, updated.to_toml())?;
    let verdict = if score > cfg.clearance_threshold {
        "granted"
    } else {
        "denied"
    };
    println!("best setting: {best}");
    println!("clearance: {score}");
    println!("verdict: {verdict}");
    match config_path {
        Some(src) => println!("wrote {} (copy of {})", out.display(), src.display()),
        None => println!("wrote {}", out.display()),
    }
    Ok(GRANTED)
}

fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "threshold,rejection_rate" => {}
        _ => bail!("{} is not a rejection-curve CSV", path.display()),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (t, r) = l
                .split_once(',')
                .ok_or_else(|| anyhow!("malformed row `{l}` in {}", path.display()))?;
            Ok((t.trim().parse()?, r.trim().parse()?))
        })
        .collect()
}

fn path_score(doc: &Value) -> Option<f64> {
    let props = doc.pointer("/features/0/properties")?;
    if let Some(s) = props.get("clearance_score").and_then(Value::as_f64) {
        return Some(s);
    }
    let probs: Vec<f64> = props
        .get("clearance")?
        .as_array()?
        .iter()
        .filter_map(Value::as_f64)
        .collect();
    (!probs.is_empty()).then(|| probs.iter().sum::<f64>() / probs.len() as f64)
}

fn slice_name(z: f64) -> String {
    format!("slice_z{}.ppm", format!("{z}").replace('-', "m"))
}

fn export_plots(
    cfg: &MissionConfig,
    grid: Option<&Path>,
    altitudes: &[f64],
    curves: &[PathBuf],
    paths: &[PathBuf],
    out: &Path,
) -> Result<u8> {
    if grid.is_none() && curves.is_empty() && paths.is_empty() {
        bail!("nothing to plot; pass --grid, --curve or --path");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let mut extent = None;

    if let Some(g) = grid {
        let field = ScalarGrid3D::from_text(&read(g)?)
            .with_context(|| format!("reading grid {}", g.display()))?;
        let spec = *field.spec();
        let (lo, hi) = field.min_max();
        let ks: Vec<usize> = if altitudes.is_empty() {
            (0..spec.counts[2]).collect()
        } else {
            altitudes
                .iter()
                .map(|&z| {
                    if !(spec.origin[2]..=spec.max_corner()[2]).contains(&z) {
                        bail!("altitude {z} lies outside the grid");
                    }
                    Ok(((z - spec.origin[2]) / spec.resolution[2]).round() as usize)
                })
                .collect::<Result<_>>()?
        };
        let [nx, ny, _] = spec.counts;
        for k in ks {
            let img = plots::heatmap_ppm(field.slice(k), nx, ny, lo, hi, plots::scale_for(nx, ny));
            let file = out.join(slice_name(spec.altitude(k)));
            write(&file, img)?;
            written.push(file);
        }
        let max = spec.max_corner();
        extent = Some([[spec.origin[0], max[0]], [spec.origin[1], max[1]]]);
    }

    let mut series = Vec::new();
    for c in curves {
        let pts = read_curve(c)?;
        if pts.is_empty() {
            eprintln!("warning: {} has no rows; curve omitted", c.display());
            continue;
        }
        let name = c
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        series.push((name, pts));
    }
    if !series.is_empty() {
        let file = out.join("rejection.svg");
        write(&file, plots::curves_svg(&series))?;
        written.push(file);
    } else if !curves.is_empty() {
        eprintln!("warning: no rejection curve had data; rejection.svg not written");
    }

    let mut drawn = Vec::new();
    for p in paths {
        let text = read(p)?;
        let doc: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let points = path_from_geojson(&text, None)
            .with_context(|| format!("reading path {}", p.display()))?;
        let score = path_score(&doc).unwrap_or(0.0);
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        drawn.push((name, points, score >= cfg.clearance_threshold));
    }
    if !drawn.is_empty() {
        let extent = extent.unwrap_or_else(|| {
            let mut e = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
            for (_, pts, _) in &drawn {
                for q in pts {
                    for a in 0..2 {
                        e[a][0] = e[a][0].min(q[a]);
                        e[a][1] = e[a][1].max(q[a]);
                    }
                }
            }
            e
        });
        let file = out.join("paths.svg");
        write(&file, plots::paths_svg(&drawn, extent))?;
        written.push(file);
    } else if !paths.is_empty() {
        eprintln!("warning: empty path set; overlay omitted");
    }

    for f in &written {
        println!("wrote {}", f.display());
    }
    Ok(GRANTED)
}
