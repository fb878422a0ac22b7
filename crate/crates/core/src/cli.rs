//! Command-line front end. Standard output carries a single JSON document per
//! run; logs go to standard error.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification mismatch,
//! 3 search budget exhausted.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use crate::circle_geometry::{construct, verify_geometry, CircleGeometry};
use crate::ekr::{
    bounds_report, classify_family, greedy_family, max_families_exact, pencil_size, ratio_bound, ratio_bound_from,
    EkrError, IntersectingFamily, RatioBound, SearchBudget,
};
use crate::finite_field::make_field;
use crate::spectral::closed_forms::{compare, SchemeCase};
use crate::spectral::{
    circle_graph, deza_check, eigenvalue_matrix, gp_profile, graph_gi, intersection_relations, splice_by_group,
    splice_by_square_type, square_split_check, verify_scheme, EigenData, RelationFamily, SchemeData,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// JSON schema version of every document written.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "circlegeom", version, about = "Finite circle geometries, association schemes and intersecting families")]
pub struct Cli {
    /// Worker threads for internal parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a geometry and write it as JSON.
    Construct {
        #[command(flatten)]
        spec: TypeSpec,
        /// Output file; without it the geometry itself goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the axioms and parameter counts.
    Verify(GeomArgs),
    /// Verify the association scheme on circles and print its eigenvalue matrix.
    Scheme {
        #[command(flatten)]
        geom: GeomArgs,
        /// Split relations by square type (odd q).
        #[arg(long)]
        splice: bool,
        /// With --splice, derive types from PGL(2,q) classes instead of square types.
        #[arg(long, requires = "splice")]
        by_group: bool,
        /// Compare against the built-in closed forms.
        #[arg(long, value_enum)]
        expect: Option<Expect>,
    },
    /// The bipartite disjointness graph at base points and its spectrum.
    Gp {
        #[command(flatten)]
        geom: GeomArgs,
        /// Base points (repeatable); default: point 0.
        #[arg(long = "point")]
        points: Vec<usize>,
        /// Use every point as base point.
        #[arg(long, conflicts_with = "points")]
        all_points: bool,
    },
    /// Search for large intersecting families.
    Search {
        #[command(flatten)]
        geom: GeomArgs,
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        /// Node budget for the exact search.
        #[arg(long, default_value_t = SearchBudget::default().max_nodes)]
        budget: u64,
        /// Largest circle count accepted by the exact search.
        #[arg(long, default_value_t = SearchBudget::default().max_circles)]
        max_circles: usize,
    },
    /// Summary of structural checks: axioms, G₁, square types, scheme, ratio bound.
    Report(GeomArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Expect {
    Paper,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Method {
    Exact,
    Ratio,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct TypeSpec {
    /// mobius, laguerre, laguerre-ext, minkowski, minkowski-phi, laguerre-poly, laguerre-poly-ext
    #[arg(long = "type")]
    pub kind: String,
    #[arg(long)]
    pub q: u64,
    /// Exponent k of the field automorphism x ↦ x^(p^k) (minkowski-phi).
    #[arg(long, default_value_t = 0)]
    pub phi: u32,
}

/// A geometry from a file or built on the fly.
#[derive(Debug, Clone, Args)]
pub struct GeomArgs {
    /// Geometry JSON written by `construct`.
    #[arg(long = "in", conflicts_with_all = ["kind", "q"])]
    pub input: Option<PathBuf>,
    #[arg(long = "type", requires = "q")]
    pub kind: Option<String>,
    #[arg(long, requires = "kind")]
    pub q: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub phi: u32,
}

/// Failure that maps to a specific exit code, carrying the JSON to print.
#[derive(Debug)]
struct Coded {
    code: i32,
    doc: Value,
}

type Outcome = std::result::Result<Value, Coded>;

fn build(spec: &TypeSpec) -> Result<CircleGeometry> {
    let field = make_field(spec.q).with_context(|| format!("q = {}", spec.q))?;
    Ok(construct(&spec.kind, &field, spec.phi)?)
}

fn load(args: &GeomArgs) -> Result<CircleGeometry> {
    match (&args.input, &args.kind, args.q) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(CircleGeometry::from_json(&text)?)
        }
        (None, Some(kind), Some(q)) => build(&TypeSpec {
            kind: kind.clone(),
            q,
            phi: args.phi,
        }),
        _ => bail!("give either --in FILE or --type and --q"),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn parameters(g: &CircleGeometry) -> Value {
    let [points, circles, size, per_point, per_pair, class] = g.expected_parameters();
    json!({
        "points": g.num_points(),
        "circles": g.num_circles(),
        "expected": {
            "points": points,
            "circles": circles,
            "circle_size": size,
            "circles_per_point": per_point,
            "circles_per_pair": per_pair,
            "parallel_class_size": class,
        }
    })
}

fn cmd_construct(spec: &TypeSpec, out: &Option<PathBuf>) -> Result<Outcome> {
    let g = build(spec)?;
    let text = g.to_json();
    match out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            Ok(Ok(json!({
                "version": REPORT_VERSION,
                "geometry": g.name(),
                "out": path,
                "parameters": parameters(&g),
            })))
        }
        None => {
            // The geometry document itself, byte for byte as serialized.
            log::info!("{}: {}", g.name(), parameters(&g));
            Ok(Ok(Value::String(text)))
        }
    }
}

fn cmd_verify(g: &CircleGeometry) -> Outcome {
    let rep = verify_geometry(g);
    let doc = json!({
        "version": REPORT_VERSION,
        "geometry": g.name(),
        "parameters": parameters(g),
        "report": to_value(&rep),
    });
    if rep.passed {
        Ok(doc)
    } else {
        Err(Coded {
            code: EXIT_MISMATCH,
            doc,
        })
    }
}

/// Scheme data and eigenvalues for a relation family, or the failure document.
fn scheme_of(rels: &RelationFamily) -> std::result::Result<(SchemeData, EigenData), Value> {
    let s = verify_scheme(rels).map_err(|w| {
        json!({
            "scheme": false,
            "labels": rels.labels,
            "witness": to_value(&w),
            "message": w.to_string(),
        })
    })?;
    let e = eigenvalue_matrix(&s).map_err(|err| {
        json!({
            "scheme": true,
            "labels": rels.labels,
            "error": err.to_string(),
        })
    })?;
    Ok((s, e))
}

fn cmd_scheme(g: &CircleGeometry, splice: bool, by_group: bool, expect: Option<Expect>) -> Result<Outcome> {
    let rels = match (splice, by_group) {
        (false, _) => intersection_relations(g),
        (true, false) => splice_by_square_type(g)?,
        (true, true) => splice_by_group(g)?,
    };
    let mut doc = json!({
        "version": REPORT_VERSION,
        "geometry": g.name(),
        "spliced": splice,
        "dropped": rels.dropped,
    });
    let (s, e) = match scheme_of(&rels) {
        Ok(x) => x,
        Err(fail) => {
            doc["result"] = fail;
            return Ok(Err(Coded {
                code: EXIT_MISMATCH,
                doc,
            }));
        }
    };
    doc["result"] = json!({
        "scheme": true,
        "labels": e.labels,
        "valencies": s.valencies,
        "intersection_numbers": s.p,
        "p_matrix": e.p_matrix,
        "multiplicities": e.multiplicities,
    });
    if expect.is_some() {
        let Some(case) = SchemeCase::of(g, splice) else {
            doc["comparison"] = json!({"error": "no closed form known for this geometry and relation choice"});
            return Ok(Err(Coded {
                code: EXIT_MISMATCH,
                doc,
            }));
        };
        let cmp = compare(&e, case, g.q as i64);
        let ok = cmp.passed();
        doc["comparison"] = to_value(&cmp);
        if !ok {
            return Ok(Err(Coded {
                code: EXIT_MISMATCH,
                doc,
            }));
        }
    }
    Ok(Ok(doc))
}

fn cmd_gp(g: &CircleGeometry, points: &[usize], all: bool) -> Result<Outcome> {
    let pts: Vec<usize> = if all {
        (0..g.num_points()).collect()
    } else if points.is_empty() {
        vec![0]
    } else {
        points.to_vec()
    };
    let mut profiles = Vec::new();
    let mut ok = true;
    for &p in &pts {
        let prof = gp_profile(g, p)?;
        ok &= prof.passed();
        profiles.push(json!({
            "base": prof.base,
            "l": prof.l.len(),
            "r": prof.r.len(),
            "delta": prof.delta,
            "r_degree": prof.r_degree,
            "degrees_ok": prof.degrees_ok,
            "spectrum": prof.spectrum,
            "lambda2_squared": prof.lambda2_squared,
            "expected_lambda2_squared": prof.expected_lambda2_squared,
            "trace_ok": prof.trace_ok,
            "families": to_value(&prof.families),
            "passed": prof.passed(),
        }));
    }
    let doc = json!({
        "version": REPORT_VERSION,
        "geometry": g.name(),
        "profiles": profiles,
        "passed": ok,
    });
    Ok(if ok {
        Ok(doc)
    } else {
        Err(Coded {
            code: EXIT_MISMATCH,
            doc,
        })
    })
}

/// Largest vertex count for which the disjointness graph's spectrum is
/// computed directly when no scheme is available.
const DIRECT_SPECTRUM_LIMIT: usize = 400;

/// Ratio bound for intersecting families, from the spliced scheme when the
/// geometry has square types, else the intersection scheme, else the
/// disjointness graph itself.
pub fn geometry_ratio_bound(g: &CircleGeometry) -> Result<(RatioBound, &'static str)> {
    let pencil = Some(pencil_size(g));
    let mut candidates = Vec::new();
    if g.square_type.is_some() && g.q % 2 == 1 {
        candidates.push((splice_by_square_type(g)?, "spliced scheme"));
    }
    candidates.push((intersection_relations(g), "intersection scheme"));
    for (rels, source) in candidates {
        if let Ok((_, e)) = scheme_of(&rels) {
            let disjoint: Vec<usize> = (0..e.labels.len()).filter(|&i| e.labels[i].starts_with("|∩|=0")).collect();
            return Ok((ratio_bound(&e, g.num_circles(), &disjoint, pencil), source));
        }
        log::info!("{source} is not an association scheme");
    }
    if g.num_circles() > DIRECT_SPECTRUM_LIMIT {
        bail!("no scheme found and {} circles is too many for a direct spectrum", g.num_circles());
    }
    let g0 = circle_graph(g, 0);
    let k = g0.regular_degree().context("disjointness graph is not regular")? as i64;
    let spec = g0.integer_spectrum()?;
    Ok((ratio_bound_from(g.num_circles(), k, spec[0].0, pencil), "disjointness graph"))
}

fn family_doc(g: &CircleGeometry, circles: &[u32]) -> Result<Value> {
    let fam = IntersectingFamily::new(g, circles)?;
    let bounds = bounds_report(g, &fam)?;
    Ok(json!({
        "family": fam.circles,
        "size": fam.size(),
        "classification": to_value(&classify_family(g, &fam.circles)),
        "bounds": to_value(&bounds),
    }))
}

fn cmd_search(g: &CircleGeometry, method: Method, budget: SearchBudget) -> Result<Outcome> {
    let mut doc = json!({
        "version": REPORT_VERSION,
        "geometry": g.name(),
        "method": to_value(&method_name(method)),
        "pencil_size": pencil_size(g),
    });
    match method {
        Method::Ratio => {
            let (rb, source) = geometry_ratio_bound(g)?;
            doc["ratio_bound"] = to_value(&rb);
            doc["source"] = json!(source);
        }
        Method::Greedy => {
            let fam = greedy_family(g);
            doc["maximum_lower_bound"] = json!(fam.len());
            doc["families"] = json!([family_doc(g, &fam)?]);
        }
        Method::Exact => {
            let ratio = if g.num_circles() <= budget.max_circles {
                geometry_ratio_bound(g).ok()
            } else {
                None
            };
            let cap = ratio.as_ref().map(|(rb, _)| rb.bound.0.floor().to_integer() as usize);
            if let Some((rb, source)) = &ratio {
                doc["ratio_bound"] = to_value(rb);
                doc["source"] = json!(source);
            }
            match max_families_exact(g, budget, cap) {
                Ok(res) => {
                    doc["maximum"] = json!(res.maximum);
                    doc["nodes"] = json!(res.nodes);
                    doc["count"] = json!(res.families.len());
                    doc["families"] = Value::Array(
                        res.families
                            .iter()
                            .map(|f| family_doc(g, f))
                            .collect::<Result<_>>()?,
                    );
                }
                Err(EkrError::BudgetExceeded {
                    best,
                    upper_bound,
                    nodes,
                }) => {
                    doc["status"] = json!("budget_exceeded");
                    doc["best_size"] = json!(best.len());
                    doc["best_family"] = json!(best);
                    doc["upper_bound"] = json!(upper_bound);
                    doc["nodes"] = json!(nodes);
                    return Ok(Err(Coded {
                        code: EXIT_BUDGET,
                        doc,
                    }));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(Ok(doc))
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exact => "exact",
        Method::Ratio => "ratio",
        Method::Greedy => "greedy",
    }
}

fn cmd_report(g: &CircleGeometry) -> Result<Outcome> {
    let verify = verify_geometry(g);
    let g1 = graph_gi(g, 1);
    let mut ok = verify.passed && g1.passed();
    let mut doc = json!({
        "version": REPORT_VERSION,
        "geometry": g.name(),
        "parameters": parameters(g),
        "axioms_passed": verify.passed,
        "failed_checks": to_value(&verify.failed()),
        "g1": to_value(&g1),
    });
    let typed = g.q % 2 == 1 && g.rho != 1 && g.square_type.is_some();
    if typed {
        let split = square_split_check(g)?;
        ok &= split.passed;
        doc["square_split"] = to_value(&split);
        let graph = g1.graph.as_ref().unwrap();
        let deza: Vec<Value> = g1
            .components
            .iter()
            .map(|c| to_value(&deza_check(g, graph, c)))
            .collect();
        ok &= deza.iter().all(|d| d["passed"] == json!(true));
        doc["deza"] = Value::Array(deza);
    }
    match geometry_ratio_bound(g) {
        Ok((rb, source)) => {
            doc["ratio_bound"] = to_value(&rb);
            doc["ratio_source"] = json!(source);
        }
        Err(e) => doc["ratio_bound"] = json!({"error": e.to_string()}),
    }
    doc["passed"] = json!(ok);
    Ok(if ok {
        Ok(doc)
    } else {
        Err(Coded {
            code: EXIT_MISMATCH,
            doc,
        })
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Construct { spec, out } => cmd_construct(spec, out),
        Command::Verify(a) => Ok(cmd_verify(&load(a)?)),
        Command::Scheme {
            geom,
            splice,
            by_group,
            expect,
        } => cmd_scheme(&load(geom)?, *splice, *by_group, *expect),
        Command::Gp {
            geom,
            points,
            all_points,
        } => cmd_gp(&load(geom)?, points, *all_points),
        Command::Search {
            geom,
            method,
            budget,
            max_circles,
        } => cmd_search(
            &load(geom)?,
            *method,
            SearchBudget {
                max_circles: *max_circles,
                max_nodes: *budget,
            },
        ),
        Command::Report(a) => cmd_report(&load(a)?),
    }
}

/// Runs the program on the given arguments and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            log::warn!("could not configure {j} threads: {e}");
        }
    }
    let (code, doc) = match dispatch(&cli) {
        Ok(Ok(doc)) => (EXIT_OK, doc),
        Ok(Err(Coded { code, doc })) => (code, doc),
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let text = match doc {
        Value::String(raw) => raw,
        other => serde_json::to_string_pretty(&other).expect("JSON values serialize"),
    };
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{text}").is_err() {
        log::warn!("standard output closed early");
    }
    code
}
