//! Subcommands. Each writes its artifacts into the output directory and
//! returns a JSON summary that is also saved as `<command>.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use netsemi::diffres::{self, ResolventSolution};
use netsemi::evolve::{self, Side, TransportFlow};
use netsemi::gridfn::{write_state_csv, NetworkState};
use netsemi::netmodel::{self, DiffusionCoupling, TransportCoupling};
use netsemi::posit;
use netsemi::spectral::{self, Region};
use netsemi::transres::{self, TransportMethod};
use netsemi::Complex64;
use serde_json::{json, Value};

use crate::config::{Coupling, Method, Model};
use crate::diag::{Failure, EXIT_RUNTIME};

/// Flag values; each falls back to the document's `run` section.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub lambda: Option<(f64, f64)>,
    pub sweep: Option<(f64, f64, usize)>,
    pub time: Option<f64>,
    pub steps: Option<usize>,
    pub method: Option<Method>,
    pub region: Option<(f64, f64, f64, f64)>,
}

pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_GRID_STEP: f64 = 0.05;
pub const DEFAULT_ROOT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-14;
/// Tolerance on `|κⱼ − 1|` for reporting `K` as column stochastic.
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(e, dir))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Failure::io(e, &path))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::io(e, &path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Saves `summary` with the list of files written so far.
    pub fn finish(&mut self, command: &str, mut summary: Value) -> Result<Value, Failure> {
        let name = format!("{command}.json");
        let mut files = self.files.clone();
        files.push(name.clone());
        summary["files"] = json!(files);
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        self.write(&name, |w| writeln!(w, "{text}"))?;
        Ok(summary)
    }
}

fn model_name(model: &Model) -> &'static str {
    match model.coupling {
        Coupling::Diffusion(_) => "diffusion",
        Coupling::Transport(_) => "transport",
    }
}

fn rows(k: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    k.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn validate(model: &Model, out: &mut Output) -> Result<Value, Failure> {
    let mut report = json!({
        "model": model_name(model),
        "edges": model.coupling.edge_count(),
        "source": if model.from_graph { "graph" } else { "matrices" },
        "grid_segments": model.grid.segments(),
    });
    match &model.coupling {
        Coupling::Diffusion(dc) => {
            report["matrices"] = json!({
                "k00": rows(&dc.k00), "k01": rows(&dc.k01), "k10": rows(&dc.k10), "k11": rows(&dc.k11),
            });
            report["sigma"] = json!(dc.sigma);
            report["positivity"] = json!(posit::check_diffusion_positivity(dc));
            report["conservation"] = json!(netmodel::check_conservation_condition(dc));
        }
        Coupling::Transport(tc) => {
            let kappa = netmodel::kappa_column_sums(tc);
            let verdict = posit::check_transport_positivity(tc);
            let stochastic = verdict.positive && kappa.iter().all(|k| (k - 1.0).abs() <= STOCHASTIC_TOL);
            let contractive = verdict.positive && kappa.iter().all(|&k| k <= 1.0 + STOCHASTIC_TOL);
            report["matrices"] = json!({ "k": rows(&tc.k) });
            report["speeds"] = json!(tc.c);
            report["sinks"] = json!([]);
            report["kappa"] = json!(kappa);
            report["column_stochastic"] = json!(stochastic);
            report["contraction"] = json!(contractive);
            report["positivity"] = json!(verdict);
        }
    }
    out.finish("validate", report)
}

fn lambdas(model: &Model, o: &Overrides) -> Result<Vec<Complex64>, Failure> {
    let run = &model.doc.run;
    let (lambda, sweep) = if o.lambda.is_some() || o.sweep.is_some() {
        (o.lambda, o.sweep)
    } else {
        (run.lambda, run.sweep)
    };
    match (lambda, sweep) {
        (Some(_), Some(_)) => Err(Failure::usage("give either a single lambda or a sweep, not both".into())),
        (None, None) => Err(Failure::usage("resolvent needs --lambda or --sweep".into())),
        (Some((re, im)), None) => Ok(vec![Complex64::new(re, im)]),
        (None, Some((a, b, n))) => {
            if n == 0 || !a.is_finite() || !b.is_finite() {
                return Err(Failure::usage(format!("invalid sweep {a}:{b}:{n}")));
            }
            if n == 1 {
                return Ok(vec![Complex64::new(a, 0.0)]);
            }
            let h = (b - a) / (n - 1) as f64;
            Ok((0..n)
                .map(|k| Complex64::new(if k + 1 == n { b } else { a + k as f64 * h }, 0.0))
                .collect())
        }
    }
}

struct Solved {
    lambda: Complex64,
    u: NetworkState<Complex64>,
    condition: f64,
    boundary_residual: f64,
    interior_residual: f64,
    iterations: usize,
}

fn from_diffusion(sol: ResolventSolution, dc: &DiffusionCoupling, f: &NetworkState<f64>) -> Solved {
    Solved {
        lambda: sol.lambda,
        interior_residual: sol.interior_residual(&dc.sigma, f),
        condition: sol.condition_estimate,
        boundary_residual: sol.boundary_residual,
        iterations: sol.iterations,
        u: sol.u,
    }
}

fn method_for(model: &Model, o: &Overrides) -> Result<Method, Failure> {
    let method = o.method.or(model.doc.run.method).unwrap_or(Method::Direct);
    let ok = match model.coupling {
        Coupling::Diffusion(_) => method != Method::Neumann,
        Coupling::Transport(_) => method != Method::Greiner,
    };
    if !ok {
        return Err(Failure::usage(format!(
            "method {method:?} does not apply to the {} model",
            model_name(model)
        )));
    }
    Ok(method)
}

pub fn resolvent(model: &Model, o: &Overrides, out: &mut Output) -> Result<Value, Failure> {
    let f = model.initial()?;
    let lambdas = lambdas(model, o)?;
    let method = method_for(model, o)?;
    let run = &model.doc.run;
    let max_iter = run.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let tol = run.tol.unwrap_or(DEFAULT_FIXED_POINT_TOL);
    let solve = |lambda: Complex64| -> Result<Solved, Failure> {
        match &model.coupling {
            Coupling::Diffusion(dc) => {
                let sol = if method == Method::Greiner {
                    diffres::solve_resolvent_greiner(lambda, dc, &f, max_iter, tol)?
                } else {
                    diffres::solve_resolvent(lambda, dc, &f)?
                };
                Ok(from_diffusion(sol, dc, &f))
            }
            Coupling::Transport(tc) => {
                let tm = if method == Method::Neumann {
                    TransportMethod::Neumann
                } else {
                    TransportMethod::Direct
                };
                let sol = transres::solve_resolvent_transport(lambda, tc, &f, tm)?;
                Ok(Solved {
                    lambda: sol.lambda,
                    interior_residual: sol.interior_residual(&tc.c, &f),
                    condition: sol.condition_estimate,
                    boundary_residual: sol.boundary_residual,
                    iterations: sol.iterations,
                    u: sol.u,
                })
            }
        }
    };

    // Independent solves in parallel; results keep sweep order.
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = lambdas.len().div_ceil(workers).max(1);
    let results: Vec<Result<Solved, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = lambdas
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(|&l| solve(l)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("resolvent worker panicked"))
            .collect()
    });
    let solved = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut entries = Vec::new();
    for (k, s) in solved.iter().enumerate() {
        out.write(&format!("resolvent_{k}_re.csv"), |w| write_state_csv(&s.u.re(), w))?;
        out.write(&format!("resolvent_{k}_im.csv"), |w| write_state_csv(&s.u.im(), w))?;
        entries.push(json!({
            "index": k,
            "lambda": cjson(s.lambda),
            "condition": s.condition,
            "boundary_residual": s.boundary_residual,
            "interior_residual": s.interior_residual,
            "iterations": s.iterations,
            "sup": s.u.sup(),
            "l1": s.u.l1(),
        }));
    }
    out.write("resolvent.csv", |w| {
        writeln!(w, "index,re,im,condition,boundary_residual,interior_residual,iterations,sup,l1")?;
        for (k, s) in solved.iter().enumerate() {
            writeln!(
                w,
                "{k},{},{},{},{},{},{},{},{}",
                s.lambda.re,
                s.lambda.im,
                s.condition,
                s.boundary_residual,
                s.interior_residual,
                s.iterations,
                s.u.sup(),
                s.u.l1()
            )?;
        }
        Ok(())
    })?;
    out.finish(
        "resolvent",
        json!({ "model": model_name(model), "method": format!("{method:?}").to_lowercase(), "solves": entries }),
    )
}

fn time_and_steps(model: &Model, o: &Overrides) -> Result<(f64, usize), Failure> {
    let t = o
        .time
        .or(model.doc.run.time)
        .ok_or_else(|| Failure::usage("evolve needs --time".into()))?;
    let steps = o.steps.or(model.doc.run.steps).unwrap_or(DEFAULT_STEPS);
    if !(t > 0.0 && t.is_finite()) || steps == 0 {
        return Err(Failure::usage(format!("need time > 0 and steps ≥ 1, got {t} and {steps}")));
    }
    Ok((t, steps))
}

pub fn evolve(model: &Model, o: &Overrides, out: &mut Output) -> Result<Value, Failure> {
    let u0 = model.initial()?;
    let (t_end, steps) = time_and_steps(model, o)?;
    let (traj, obs, extra) = match &model.coupling {
        Coupling::Diffusion(dc) => {
            let stride = model.doc.run.stride.unwrap_or(1);
            if stride == 0 {
                return Err(Failure::config(Some("run.stride".into()), "must be at least 1".into()));
            }
            let traj = evolve::diffusion_evolve(&u0, dc, t_end, steps, stride)?;
            let obs = evolve::observables(&traj, None);
            (traj, obs, json!({ "scheme": "backward_euler", "step": t_end / steps as f64 }))
        }
        Coupling::Transport(tc) => {
            let run = evolve::transport_evolve(&u0, tc, t_end, t_end / steps as f64)?;
            let residual = run.history.boundary_residual(&tc.k);
            (
                run.trajectory,
                run.observables,
                json!({ "scheme": "characteristics", "boundary_residual": residual }),
            )
        }
    };
    out.write("trajectory.csv", |w| evolve::write_trajectory_csv(&traj, w))?;
    out.write("observables.csv", |w| evolve::write_observables_csv(&obs, w))?;
    let first = obs.first().expect("trajectory has the initial state");
    let last = obs.last().expect("trajectory has the initial state");
    let mut summary = json!({
        "model": model_name(model),
        "time": t_end,
        "snapshots": traj.times.len(),
        "mass": [first.mass, last.mass],
        "min": obs.iter().map(|o| o.min).fold(f64::INFINITY, f64::min),
    });
    for (k, v) in extra.as_object().expect("object") {
        summary[k] = v.clone();
    }
    out.finish("evolve", summary)
}

pub fn spectrum(model: &Model, o: &Overrides, out: &mut Output) -> Result<Value, Failure> {
    let run = &model.doc.run;
    let (re0, re1, im0, im1) = o
        .region
        .or(run.region)
        .ok_or_else(|| Failure::usage("spectrum needs --region".into()))?;
    let region = Region::new(re0, re1, im0, im1)?;
    let step = run.grid_step.unwrap_or(DEFAULT_GRID_STEP);
    let tol = run.tol.unwrap_or(DEFAULT_ROOT_TOL);
    let roots = match &model.coupling {
        Coupling::Transport(tc) => {
            spectral::find_roots(|z| Ok(spectral::char_det_transport(z, tc)), region, step, tol)?
        }
        Coupling::Diffusion(dc) => spectral::find_roots(|z| spectral::char_det_diffusion(z, dc), region, step, tol)?,
    };
    out.write("roots.csv", |w| spectral::write_roots_csv(&roots, w))?;
    let list: Vec<Value> = roots
        .iter()
        .map(|r| json!({ "lambda": cjson(r.lambda), "residual": r.residual, "multiplicity_hint": r.multiplicity_hint }))
        .collect();
    out.finish(
        "spectrum",
        json!({ "model": model_name(model), "region": [re0, re1, im0, im1], "grid_step": step, "roots": list }),
    )
}

pub fn witness(model: &Model, out: &mut Output) -> Result<Value, Failure> {
    match &model.coupling {
        Coupling::Diffusion(dc) => {
            let (state, spec) = posit::diffusion_pmp_witness(dc, &model.grid)?;
            let cert = &spec.certificate;
            let doc = json!({
                "violation": spec.violation,
                "edge": cert.edge,
                "x0": cert.x0,
                "u_x0": cert.u_x0,
                "d2u": cert.d2u,
                "min_sampled": cert.min_sampled,
                "samples": cert.samples,
                "boundary_residual": cert.boundary_residual,
                "verifies": cert.verifies(),
            });
            if !cert.verifies() {
                return Err(Failure::new(EXIT_RUNTIME, "certificate", format!("witness certificate failed: {doc}")));
            }
            out.write("witness.csv", |w| write_state_csv(&state, w))?;
            let text = serde_json::to_string_pretty(&doc).expect("certificate serializes");
            out.write("certificate.json", |w| writeln!(w, "{text}"))?;
            out.finish("witness", json!({ "model": "diffusion", "certificate": doc }))
        }
        Coupling::Transport(tc) => transport_witness(model, tc, out),
    }
}

fn transport_witness(model: &Model, tc: &TransportCoupling, out: &mut Output) -> Result<Value, Failure> {
    let (state, w) = posit::transport_negativity_witness(tc, &model.grid)?;
    // Probe the inflow end of the target edge halfway through the window.
    let (x, t) = (0.0, 0.5 * w.window);
    let predicted = w.predict(x, t).expect("probe lies in the prediction window");
    let flow = TransportFlow::new(&state, tc, t)?;
    let evolved = flow.value(w.target, x, t, Side::Plus)?;
    let doc = json!({
        "violation": { "i": w.target, "j": w.source, "value": w.k },
        "window": w.window,
        "probe": { "edge": w.target, "x": x, "t": t },
        "predicted": predicted,
        "evolved": evolved,
        "negative": evolved < 0.0,
    });
    out.write("witness.csv", |wr| write_state_csv(&state, wr))?;
    let text = serde_json::to_string_pretty(&doc).expect("certificate serializes");
    out.write("certificate.json", |wr| writeln!(wr, "{text}"))?;
    out.finish("witness", json!({ "model": "transport", "certificate": doc }))
}
