//! One function per CLI verb.
//!
//! Stage commands (`ingest`, `proportion`, `scale`, `squeeze`,
//! `squeeze-loop`, `train`) run against the directory named by the config,
//! write their artifacts, snapshot the effective config and append an entry to
//! the manifest. A stage that fails to converge still writes everything and
//! then reports [`CliError::NonConvergence`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use condnet::data::adult::load_adult;
use condnet::data::container::{read_dataset, write_dataset};
use condnet::data::idx::load_mnist_idx;
use condnet::data::wavelet::{coefficient_matrix, select_wavelets};
use condnet::data::{split_validation, Dataset, Role};
use condnet::design::{self, DesignReport};
use condnet::trainer::{evaluate, train_full};
use condnet::{report, FeedForwardNet, NetworkSpec};

use crate::config::{DatasetSource, RunConfig};
use crate::manifest::{fingerprint, write_atomic, RunDir, RunManifest, Stage, SNAPSHOT};
use crate::CliError;

pub const TRAIN_DATA: &str = "train.csds";
pub const VALIDATION_DATA: &str = "validation.csds";
pub const TEST_DATA: &str = "test.csds";

/// Design records the `report` verb knows how to render.
pub const REPORT_STAGES: [&str; 4] = ["proportion", "scale", "squeeze", "squeeze-loop"];

/// What a stage produced.
#[derive(Default)]
struct StageOutput {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    /// Reasons the stage did not converge.
    unconverged: Vec<String>,
    notes: Vec<String>,
}

fn run_stage(
    cfg: &RunConfig,
    command: &str,
    body: impl FnOnce(&RunConfig, &RunDir) -> Result<StageOutput, CliError>,
) -> Result<(), CliError> {
    cfg.validate()?;
    let run = RunDir::new(&cfg.out);
    let snapshot = cfg.to_toml()?;
    let seeds = BTreeMap::from([
        ("master".to_string(), cfg.seed),
        ("split".to_string(), cfg.split_seed()),
        ("init".to_string(), cfg.init_seed()),
        ("shuffle".to_string(), cfg.train.shuffle_seed),
        ("proportion".to_string(), cfg.design.proportion.seed),
        ("scale".to_string(), cfg.design.scale.seed),
    ]);
    let mut manifest = RunManifest::load(&run.root)?.unwrap_or_else(|| RunManifest::new(snapshot.clone(), seeds.clone()));

    let start = Instant::now();
    let out = body(cfg, &run)?;
    let seconds = start.elapsed().as_secs_f64();

    write_atomic(&run.root.join(SNAPSHOT), snapshot.as_bytes())?;
    let status = if out.unconverged.is_empty() { 0 } else { 3 };
    let mut notes = out.notes;
    notes.extend(out.unconverged.iter().cloned());
    manifest.config_snapshot = snapshot;
    manifest.seeds = seeds;
    manifest.stages.push(Stage {
        command: command.to_string(),
        seconds,
        status,
        inputs: run.fingerprints(&out.inputs)?,
        outputs: run.fingerprints(&out.outputs)?,
        notes,
    });
    manifest.save(&run.root)?;
    if out.unconverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(out.unconverged))
    }
}

fn require(paths: &[PathBuf]) -> Result<(), CliError> {
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Missing(missing))
    }
}

struct Prepared {
    train: Dataset,
    validation: Dataset,
    test: Dataset,
    paths: Vec<PathBuf>,
}

fn load_prepared(run: &RunDir) -> Result<Prepared, CliError> {
    let paths = vec![run.data(TRAIN_DATA), run.data(VALIDATION_DATA), run.data(TEST_DATA)];
    require(&paths)?;
    Ok(Prepared {
        train: read_dataset(&paths[0])?,
        validation: read_dataset(&paths[1])?,
        test: read_dataset(&paths[2])?,
        paths,
    })
}

pub fn load_model(path: &Path) -> Result<FeedForwardNet, CliError> {
    require(&[path.to_path_buf()])?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    FeedForwardNet::from_bytes(&bytes).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn save_model(path: &Path, net: &FeedForwardNet) -> Result<(), CliError> {
    write_atomic(path, &net.to_bytes()?)
}

fn save_report(run: &RunDir, stage: &str, report: &DesignReport) -> Result<Vec<PathBuf>, CliError> {
    let path = run.report(&format!("{stage}.json"));
    let json = report.to_json().map_err(|e| CliError::Other(e.to_string()))?;
    write_atomic(&path, json.as_bytes())?;
    let mut written = vec![path];
    written.extend(render(run, stage)?);
    Ok(written)
}

/// Error rates of `net` on each prepared split as CSV.
fn metrics_csv(net: &FeedForwardNet, sets: &[(&str, &Dataset)]) -> Result<String, CliError> {
    let mut out = String::from("dataset,rows,error_percent\n");
    for (name, d) in sets {
        if d.is_empty() {
            continue;
        }
        let e = evaluate(net, d)?;
        out.push_str(&format!("{name},{},{e}\n", d.len()));
    }
    Ok(out)
}

fn write_metrics(run: &RunDir, stage: &str, net: &FeedForwardNet, data: &Prepared) -> Result<PathBuf, CliError> {
    let csv = metrics_csv(
        net,
        &[
            ("train", &data.train),
            ("validation", &data.validation),
            ("test", &data.test),
        ],
    )?;
    print!("{csv}");
    let path = run.report(&format!("{stage}-metrics.csv"));
    write_atomic(&path, csv.as_bytes())?;
    Ok(path)
}

pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_inputs_exist()?;
    run_stage(cfg, "ingest", |cfg, run| {
        let mut notes = Vec::new();
        let (train, test) = match &cfg.dataset {
            DatasetSource::Adult { train, test, .. } => {
                let adult = load_adult(train, test)?;
                if adult.unknown_test_categories > 0 {
                    notes.push(format!(
                        "{} test categories not seen in training",
                        adult.unknown_test_categories
                    ));
                }
                (adult.train, adult.test)
            }
            DatasetSource::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_subset,
                ..
            } => {
                let tr = load_mnist_idx(train_images, train_labels)?;
                let te = load_mnist_idx(test_images, test_labels)?;
                let mut train = Dataset::new(coefficient_matrix(&tr), tr.labels, 10, Role::Train, "mnist haar")?;
                if let Some(n) = train_subset {
                    train = train.head(*n);
                }
                let test = Dataset::new(coefficient_matrix(&te), te.labels, 10, Role::Test, "mnist haar")?;
                (train, test)
            }
        };
        let (mut train, mut validation) = split_validation(&train, cfg.dataset.split().clone(), cfg.split_seed())?;
        let mut test = test;
        let mut outputs = Vec::new();
        if let DatasetSource::Mnist { wavelets, .. } = &cfg.dataset {
            // choose the basis on the training part only
            let selection = select_wavelets(train.features(), *wavelets)?;
            let project = |d: &Dataset, role: Role| {
                Dataset::new(
                    d.features().select_columns(&selection.selected_indices),
                    d.labels().to_vec(),
                    10,
                    role,
                    &format!("mnist {} haar wavelets", selection.selected_indices.len()),
                )
            };
            train = project(&train, Role::Train)?;
            validation = project(&validation, Role::Validation)?;
            test = project(&test, Role::Test)?;
            let path = run.data("wavelets.json");
            let json = serde_json::to_string_pretty(&selection).map_err(|e| CliError::Other(e.to_string()))?;
            write_atomic(&path, json.as_bytes())?;
            outputs.push(path);
        }
        for (name, d) in [(TRAIN_DATA, &train), (VALIDATION_DATA, &validation), (TEST_DATA, &test)] {
            let path = run.data(name);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            write_dataset(&path, d)?;
            println!("{name}: {} rows x {} features", d.len(), d.width());
            outputs.push(path);
        }
        Ok(StageOutput {
            inputs: cfg.input_paths().into_iter().map(Path::to_path_buf).collect(),
            outputs,
            unconverged: vec![],
            notes,
        })
    })
}

fn initial_spec(cfg: &RunConfig, d: &Dataset) -> Result<NetworkSpec, CliError> {
    Ok(NetworkSpec::new(
        d.width(),
        cfg.network.hidden.clone(),
        d.class_count(),
        cfg.network.activation,
        cfg.init_seed(),
    )?)
}

pub fn proportion(cfg: &RunConfig) -> Result<(), CliError> {
    run_stage(cfg, "proportion", |cfg, run| {
        let data = load_prepared(run)?;
        let spec = initial_spec(cfg, &data.train)?;
        let (spec, net, rep) = design::proportion(&spec, &data.train, &cfg.design.proportion, &cfg.train)?;
        println!("proportioned widths: {:?}", spec.hidden_widths);
        let model = run.model("proportion.cshp");
        save_model(&model, &net)?;
        let mut outputs = vec![model];
        outputs.extend(save_report(run, "proportion", &rep)?);
        let mut unconverged = Vec::new();
        if rep.proportion_converged == Some(false) {
            unconverged.push(format!(
                "proportioning stopped after {} iterations with a layer above tau",
                rep.proportion.len()
            ));
        }
        Ok(StageOutput {
            inputs: data.paths,
            outputs,
            unconverged,
            notes: vec![],
        })
    })
}

pub fn scale(cfg: &RunConfig) -> Result<(), CliError> {
    run_stage(cfg, "scale", |cfg, run| {
        let data = load_prepared(run)?;
        let mut inputs = data.paths.clone();
        // start from the proportioned widths when a proportion stage has run
        let base_model = run.model("proportion.cshp");
        let base = if base_model.is_file() {
            inputs.push(base_model.clone());
            load_model(&base_model)?.spec().with_seed(cfg.init_seed())
        } else {
            initial_spec(cfg, &data.train)?
        };
        let (spec, net, rep) = design::scale_search(&base, &data.train, &data.validation, &cfg.design.scale, &cfg.train)?;
        println!("chosen beta {:?}, widths {:?}", rep.chosen_beta, spec.hidden_widths);
        let model = run.model("scaled.cshp");
        save_model(&model, &net)?;
        let mut outputs = vec![model];
        outputs.extend(save_report(run, "scale", &rep)?);
        outputs.push(write_metrics(run, "scale", &net, &data)?);
        Ok(StageOutput {
            inputs,
            outputs,
            ..StageOutput::default()
        })
    })
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    run_stage(cfg, "train", |cfg, run| {
        let data = load_prepared(run)?;
        let spec = initial_spec(cfg, &data.train)?;
        let (net, metrics) = train_full(FeedForwardNet::init(&spec)?, &data.train, Some(&data.validation), &cfg.train)?;
        let model = run.model("trained.cshp");
        save_model(&model, &net)?;
        let path = run.report("train.json");
        let json = serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Other(e.to_string()))?;
        write_atomic(&path, json.as_bytes())?;
        let metrics_path = write_metrics(run, "train", &net, &data)?;
        Ok(StageOutput {
            inputs: data.paths,
            outputs: vec![model, path, metrics_path],
            ..StageOutput::default()
        })
    })
}

/// The model a squeeze verb starts from: `explicit`, else the scaled winner,
/// else the plainly trained model.
fn squeeze_input(run: &RunDir, explicit: Option<&Path>) -> Result<PathBuf, CliError> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    let candidates = [run.model("scaled.cshp"), run.model("trained.cshp")];
    candidates
        .iter()
        .find(|p| p.is_file())
        .cloned()
        .ok_or_else(|| CliError::Missing(candidates.iter().map(|p| p.display().to_string()).collect()))
}

fn flagged_layers(rep: &DesignReport, hidden: usize) -> Vec<String> {
    rep.squeeze
        .iter()
        .flat_map(|r| r.layers.iter().map(move |l| (r.round, l)))
        .filter(|(_, l)| l.flagged && l.layer < hidden)
        .map(|(round, l)| format!("round {round}: layer {} stays above tau", l.layer + 1))
        .collect()
}

fn squeeze_stage(cfg: &RunConfig, model: Option<&Path>, looped: bool) -> Result<(), CliError> {
    let name = if looped { "squeeze-loop" } else { "squeeze" };
    run_stage(cfg, name, |cfg, run| {
        let data = load_prepared(run)?;
        let source = squeeze_input(run, model)?;
        let net = load_model(&source)?;
        // retraining uses every labelled training row, like the final fit
        let full = data.train.concat(&data.validation, Role::Train)?;
        let sq = cfg.design.squeeze.config();
        let (out, rep) = if looped {
            design::squeeze_retrain_loop(
                &net,
                &full,
                Some(&data.test),
                &sq,
                &cfg.train,
                sq.retrain_epochs,
                cfg.design.squeeze.max_rounds,
            )?
        } else {
            design::squeeze_retrain(&net, &full, Some(&data.test), &sq, &cfg.train)?
        };
        println!(
            "widths {:?} -> {:?}",
            net.spec().hidden_widths,
            out.spec().hidden_widths
        );
        let path = run.model(&format!("{name}.cshp"));
        save_model(&path, &out)?;
        let mut outputs = vec![path];
        outputs.extend(save_report(run, name, &rep)?);
        outputs.push(write_metrics(run, name, &out, &data)?);
        let mut inputs = data.paths.clone();
        inputs.push(source);
        Ok(StageOutput {
            inputs,
            outputs,
            unconverged: flagged_layers(&rep, net.hidden_count()),
            notes: vec![],
        })
    })
}

pub fn squeeze(cfg: &RunConfig, model: Option<&Path>) -> Result<(), CliError> {
    squeeze_stage(cfg, model, false)
}

pub fn squeeze_loop(cfg: &RunConfig, model: Option<&Path>) -> Result<(), CliError> {
    squeeze_stage(cfg, model, true)
}

/// Error of `model` on each dataset plus its per-layer condition numbers.
/// With `out`, both tables are also written under `out/reports/`.
pub fn eval(model: &Path, datasets: &[PathBuf], out: Option<&Path>) -> Result<String, CliError> {
    let net = load_model(model)?;
    require(datasets)?;
    let mut sets = Vec::new();
    for p in datasets {
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        sets.push((name, read_dataset(p)?));
    }
    let named: Vec<(&str, &Dataset)> = sets.iter().map(|(n, d)| (n.as_str(), d)).collect();
    let metrics = metrics_csv(&net, &named)?;
    let kappas = net.condition_numbers()?;
    let mut layers = String::from("layer,inputs,neurons,kappa\n");
    for (i, (l, k)) in net.layers().iter().zip(&kappas).enumerate() {
        let k = if k.is_finite() { k.to_string() } else { "inf".into() };
        layers.push_str(&format!("{},{},{},{k}\n", i + 1, l.inputs(), l.neurons()));
    }
    if let Some(dir) = out {
        let run = RunDir::new(dir);
        let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        write_atomic(&run.report(&format!("eval-{stem}.csv")), metrics.as_bytes())?;
        write_atomic(&run.report(&format!("kappa-{stem}.csv")), layers.as_bytes())?;
    }
    let mut widths = net.spec().hidden_widths.clone();
    widths.push(net.spec().output_width);
    Ok(format!("{metrics}\n{}", report::layer_markdown(&widths, &kappas)))
}

/// Renders CSV and markdown for one stored design record.
fn render(run: &RunDir, stage: &str) -> Result<Vec<PathBuf>, CliError> {
    let source = run.report(&format!("{stage}.json"));
    let text = std::fs::read_to_string(&source).map_err(|e| CliError::io(&source, e))?;
    let rep = DesignReport::from_json(&text).map_err(|e| CliError::Other(format!("{}: {e}", source.display())))?;
    let files: Vec<(String, String)> = match stage {
        "proportion" => {
            let output_width = match load_model(&run.model("proportion.cshp")) {
                Ok(net) => net.spec().output_width,
                Err(_) => 0,
            };
            vec![
                ("condition.csv".into(), report::condition_csv(&rep)),
                ("proportion.md".into(), report::proportion_markdown(&rep, output_width)),
            ]
        }
        "scale" => vec![
            ("scale.csv".into(), report::scale_csv(&rep)),
            ("scale.md".into(), report::scale_markdown(&rep)),
        ],
        _ => vec![
            (format!("{stage}.csv"), report::squeeze_csv(&rep)),
            (format!("{stage}.md"), report::squeeze_markdown(&rep)),
        ],
    };
    let mut written = Vec::new();
    for (name, body) in files {
        let path = run.report(&name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Regenerates every table and plot CSV from the design records in `dir`.
pub fn report(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let run = RunDir::new(dir);
    let present: Vec<&str> = REPORT_STAGES
        .iter()
        .copied()
        .filter(|s| run.report(&format!("{s}.json")).is_file())
        .collect();
    if present.is_empty() {
        return Err(CliError::Missing(
            REPORT_STAGES
                .iter()
                .map(|s| run.report(&format!("{s}.json")).display().to_string())
                .collect(),
        ));
    }
    let mut written = Vec::new();
    for stage in present {
        written.extend(render(&run, stage)?);
    }
    Ok(written)
}

/// Fingerprint of every file a stage wrote, for comparing two runs.
pub fn output_fingerprints(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for sub in ["data", "models", "reports"] {
        let d = dir.join(sub);
        let Ok(entries) = std::fs::read_dir(&d) else { continue };
        for e in entries {
            let p = e.map_err(|e| CliError::io(&d, e))?.path();
            out.insert(format!("{sub}/{}", p.file_name().unwrap_or_default().to_string_lossy()), fingerprint(&p)?);
        }
    }
    Ok(out)
}
