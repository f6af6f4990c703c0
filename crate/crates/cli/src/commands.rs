use std::collections::BTreeMap;

use minimal_annuli::ovals::{self, ClosedCurve, EigenOptions};
use minimal_annuli::par::map_slice;
use minimal_annuli::stability::{cat_ms, lowest_jacobi_eigenvalue, tangent_cone_heights};
use minimal_annuli::thresholds::{f_omega_sweep, l_crit, ms_piece_for_lower_length, spanning_catenoids, MsSolution};
use minimal_annuli::weierstrass::{
    area_comparison, convexity_check, immerse, level_profile, random_data, second_derivative_decomposition, GridSpec,
    RandomDataSpec, ValidationOptions, WeierstrassData,
};
use minimal_annuli::{catenoid, solve_lambda0, CatenoidPiece, Execution, Slab};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::emit::{number, Report, Table};
use crate::error::CliError;

type Fields = BTreeMap<String, Value>;

fn read_input(cfg: &RunConfig) -> Result<Option<String>, CliError> {
    match &cfg.input_path {
        None => Ok(None),
        Some(p) => std::fs::read_to_string(p).map(Some).map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display()))),
    }
}

fn parse_input<T: DeserializeOwned + Default>(cfg: &RunConfig) -> Result<T, CliError> {
    match read_input(cfg)? {
        None => Ok(T::default()),
        Some(s) => serde_json::from_str(&s).map_err(|e| CliError::Input(format!("malformed input document: {e}"))),
    }
}

fn slab_from(pair: Option<[f64; 2]>) -> Result<Slab, CliError> {
    match pair {
        None => Ok(Slab::unit()),
        Some([lo, hi]) => Slab::new(lo, hi).map_err(|e| CliError::Input(e.to_string())),
    }
}

/// Errors caused by values read from the input document.
fn input_err(e: minimal_annuli::Error) -> CliError {
    match e {
        minimal_annuli::Error::InvalidParameter(m) | minimal_annuli::Error::Configuration(m) => CliError::Input(m),
        e @ minimal_annuli::Error::OutOfRange { .. } => CliError::Input(e.to_string()),
        e => CliError::Core(e),
    }
}

fn ser<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn record(fields: Fields) -> Report {
    Report::Record { fields, exact: BTreeMap::new() }
}

fn fields<const N: usize>(pairs: [(&str, Value); N]) -> Fields {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Lambda0 => lambda0(cfg),
        Command::Catenoid => catenoid_cmd(cfg),
        Command::Ms => ms(cfg),
        Command::Threshold => threshold(cfg),
        Command::Annulus => annulus(cfg),
        Command::Oval => oval(cfg),
    }
}

fn lambda0(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.input_path.is_some() {
        return Err(CliError::Config("lambda0 takes no input".into()));
    }
    let l = solve_lambda0();
    let piece = CatenoidPiece::new(l, 0.0, Slab::unit())?;
    Ok(record(fields([
        ("lambda0", number(l)),
        ("residual_lambdanot", number(catenoid::lambda0_residual(l))),
        ("residual_tanh", number((1.0 / l).tanh() - l)),
        ("area", number(piece.area_in_slab())),
        ("boundary_length", number(piece.boundary_length())),
    ])))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatenoidInput {
    scale: Option<f64>,
    offset: Option<f64>,
    slab: Option<[f64; 2]>,
}

fn catenoid_row(piece: &CatenoidPiece, cfg: &RunConfig) -> Result<Fields, CliError> {
    let area = piece.area_in_slab();
    let quad = piece.area_by_quadrature(cfg.grid["height_nodes"], cfg.grid["angle_nodes"]);
    Ok(fields([
        ("scale", number(piece.scale)),
        ("offset", number(piece.offset)),
        ("area", number(area)),
        ("area_quadrature", number(quad)),
        ("area_residual", number((area - quad).abs() / area)),
        ("lower_length", number(piece.level_length(piece.slab.h_minus)?)),
        ("upper_length", number(piece.level_length(piece.slab.h_plus)?)),
        ("boundary_length", number(piece.boundary_length())),
        ("flux_vertical", number(catenoid::vertical_flux(piece.scale))),
    ]))
}

fn catenoid_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let input: CatenoidInput = parse_input(cfg)?;
    let slab = slab_from(input.slab)?;
    let offset = input.offset.unwrap_or(0.0);
    match &cfg.sweep {
        None => {
            let piece = CatenoidPiece::new(input.scale.unwrap_or_else(solve_lambda0), offset, slab).map_err(input_err)?;
            let mut f = catenoid_row(&piece, cfg)?;
            f.insert("slab".into(), json!([number(slab.h_minus), number(slab.h_plus)]));
            Ok(record(f))
        }
        Some(sweep) => {
            let cols = vec!["scale", "offset", "area", "area_quadrature", "area_residual", "lower_length", "upper_length", "boundary_length", "flux_vertical"];
            let mut table = Table::new(cols.clone());
            for scale in sweep.values() {
                let row = catenoid_row(&CatenoidPiece::new(scale, offset, slab)?, cfg)?;
                table.push(cols.iter().map(|c| row[*c].clone()).collect());
            }
            Ok(Report::Table { key: "pieces", table, extra: fields([("slab", json!([slab.h_minus, slab.h_plus]))]) })
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MsInput {
    apex_height: Option<f64>,
}

fn ms_row(apex: f64, mesh: usize) -> Result<Fields, CliError> {
    let c = tangent_cone_heights(apex);
    let piece = cat_ms(apex);
    let spec = lowest_jacobi_eigenvalue(&piece, mesh)?;
    Ok(fields([
        ("apex_height", number(apex)),
        ("t_minus", number(c.t_minus)),
        ("t_plus", number(c.t_plus)),
        ("mu1", number(spec.lowest_eigenvalue)),
        ("end_residual", number(spec.end_residual)),
        ("lower_length", number(piece.level_length(c.t_minus)?)),
        ("upper_length", number(piece.level_length(c.t_plus)?)),
    ]))
}

fn ms(cfg: &RunConfig) -> Result<Report, CliError> {
    let input: MsInput = parse_input(cfg)?;
    let mesh = cfg.grid["mesh"];
    match &cfg.sweep {
        None => Ok(record(ms_row(input.apex_height.unwrap_or(0.0), mesh)?)),
        Some(sweep) => {
            let cols = vec!["apex_height", "t_minus", "t_plus", "mu1", "end_residual", "lower_length", "upper_length"];
            let mut table = Table::new(cols.clone());
            for row in map_slice(&sweep.values(), Execution::default(), |&a| ms_row(a, mesh)) {
                let row = row?;
                table.push(cols.iter().map(|c| row[*c].clone()).collect());
            }
            Ok(Report::Table { key: "pieces", table, extra: BTreeMap::new() })
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdInput {
    lower_length: Option<f64>,
    upper_length: Option<f64>,
    slab: Option<[f64; 2]>,
}

fn threshold_row(s: &MsSolution, mesh: usize) -> Result<Vec<Value>, CliError> {
    let mu1 = lowest_jacobi_eigenvalue(&s.piece().canonical().0, mesh)?.lowest_eigenvalue;
    Ok(vec![number(s.lower_length), number(s.upper_length), number(s.scale), number(s.offset), number(mu1)])
}

fn threshold(cfg: &RunConfig) -> Result<Report, CliError> {
    let input: ThresholdInput = parse_input(cfg)?;
    let slab = slab_from(input.slab)?;
    let mesh = cfg.grid["mesh"];
    let crit = l_crit(&slab);
    if let Some(sweep) = &cfg.sweep {
        let sols = f_omega_sweep(&sweep.values(), &slab, Execution::default());
        let sols: Vec<MsSolution> = sols.into_iter().collect::<Result<_, _>>()?;
        let mut table = Table::new(vec!["L_minus", "F", "lambda", "offset", "mu1_residual"]);
        for row in map_slice(&sols, Execution::default(), |s| threshold_row(s, mesh)) {
            table.push(row?);
        }
        let extra = fields([("l_crit", number(crit)), ("slab", json!([slab.h_minus, slab.h_plus]))]);
        return Ok(Report::Table { key: "rows", table, extra });
    }
    let mut f = fields([("l_crit", number(crit)), ("slab", json!([number(slab.h_minus), number(slab.h_plus)]))]);
    if let Some(lm) = input.lower_length {
        let s = ms_piece_for_lower_length(lm, &slab).map_err(input_err)?;
        let row = threshold_row(&s, mesh)?;
        for (k, v) in ["L_minus", "F", "lambda", "offset", "mu1_residual"].into_iter().zip(row) {
            f.insert(k.into(), v);
        }
        f.insert("apex_height".into(), number(s.apex_height));
        if let Some(lp) = input.upper_length {
            let sp = spanning_catenoids(lm, lp, &slab).map_err(input_err)?;
            f.insert("L_plus".into(), number(lp));
            f.insert("spanning_count".into(), Value::from(sp.pieces.len()));
            f.insert("tangential".into(), Value::Bool(sp.tangential));
            f.insert("spanning".into(), json!(sp.pieces.iter().map(|p| json!({ "scale": number(p.scale), "offset": number(p.offset) })).collect::<Vec<_>>()));
        }
    } else if input.upper_length.is_some() {
        return Err(CliError::Input("upper_length needs lower_length".into()));
    }
    Ok(record(f))
}

fn annulus(cfg: &RunConfig) -> Result<Report, CliError> {
    let data = match read_input(cfg)? {
        Some(s) => WeierstrassData::from_json(&s)?,
        None => random_data(&mut ChaCha8Rng::seed_from_u64(cfg.seed), &RandomDataSpec::default())?,
    };
    let vopts = ValidationOptions { eps: cfg.tolerances["eps"], residual_tol: cfg.tolerances["residual"], ..ValidationOptions::default() };
    let validation = data.validate_with(&vopts)?;
    let profile = level_profile(&data, cfg.grid["profile_levels"])?;
    let convexity = convexity_check(&profile);
    let (lo, hi) = data.height_range(4096);
    let slab = Slab::new(lo, hi).map_err(|e| CliError::Input(format!("no closed level range: {e}")))?;
    let area = area_comparison(&data, &slab)?;
    let annulus = immerse(&data, &GridSpec::new(cfg.grid["levels"], cfg.grid["nodes"]))?;
    let mid = annulus.levels() / 2;
    let decomposition = second_derivative_decomposition(&annulus, mid)?;
    let f = fields([
        ("mu", number(data.mu())),
        ("flux", json!(data.flux())),
        ("height_range", json!([lo, hi])),
        ("validation", ser(&validation)),
        ("convexity", ser(&convexity)),
        ("area", ser(&area)),
        ("decomposition", ser(&decomposition)),
        ("closure_error", number(annulus.closure_error)),
        ("profile", json!({ "log_radii": profile.log_radii, "lengths": profile.lengths, "second_derivative": profile.second_derivative })),
    ]);
    let data_doc: Value = serde_json::from_str(&data.to_json()).expect("data document is JSON");
    Ok(Report::Record { fields: f, exact: BTreeMap::from([("data".to_string(), data_doc)]) })
}

fn oval_fields(rep: &ovals::OvalReport) -> Fields {
    fields([
        ("length", number(rep.length)),
        ("lambda1", number(rep.lambda1)),
        ("functional", number(rep.functional)),
        ("refinements", json!(rep.refinements.iter().map(|(n, l)| json!([n, number(*l)])).collect::<Vec<_>>())),
    ])
}

fn oval(cfg: &RunConfig) -> Result<Report, CliError> {
    let opts = EigenOptions { start: cfg.grid["start"], max: cfg.grid["max"], tolerance: cfg.tolerances["tolerance"] };
    match read_input(cfg)? {
        Some(s) => {
            let curve = ClosedCurve::from_json(&s)?;
            let rep = ovals::lowest_eigenvalue_with(&curve, &opts)?;
            Ok(record(oval_fields(&rep)))
        }
        None => {
            // No curve given: the seeded 50-curve corpus.
            let corpus = ovals::corpus(cfg.seed)?;
            let reports = map_slice(&corpus, Execution::default(), |(_, c)| ovals::lowest_eigenvalue_with(c, &opts));
            let mut table = Table::new(vec!["name", "length", "lambda1", "functional"]);
            let mut min = f64::INFINITY;
            for ((name, _), rep) in corpus.iter().zip(reports) {
                let rep = rep?;
                min = min.min(rep.functional);
                table.push(vec![Value::String(name.clone()), number(rep.length), number(rep.lambda1), number(rep.functional)]);
            }
            Ok(Report::Table { key: "curves", table, extra: fields([("min_functional", number(min))]) })
        }
    }
}
