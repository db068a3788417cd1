use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cordseg_core::data_io::{gen_synthetic, load_dataset, load_grayscale, save_dataset, save_mask};
use cordseg_core::gradcheck::{finite_diff_check_refined, seeded_unet_loss, Objective, MIN_REFINED_STEP};
use cordseg_core::tiling::predict_frame;
use cordseg_core::trainer::{evaluate, split_dataset, train_observed, AdamConfig, TrainEvent};
use cordseg_core::unet::{load_checkpoint, save_checkpoint};
use cordseg_core::{Error, TrainConfig, UNetConfig};

use crate::{Command, EvalArgs, GradcheckArgs, PredictArgs, SynthArgs, TrainArgs};

/// Failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(command: Command) -> ExitCode {
    let threads = match &command {
        Command::Train(a) => a.threads,
        Command::Predict(a) => a.threads,
        Command::Eval(a) => a.threads,
        _ => None,
    };
    let result = with_threads(threads, || match command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => gradcheck(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn with_threads(threads: Option<usize>, f: impl FnOnce() -> CmdResult + Send) -> CmdResult {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

fn write_file(path: &Path, contents: &[u8]) -> CmdResult {
    fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

fn synth(a: SynthArgs) -> CmdResult {
    let ds = gen_synthetic(a.count, a.size, a.seed)?;
    save_dataset(&a.out, &ds)?;
    eprintln!("wrote {} pairs of {}x{} to {}", ds.len(), a.size, a.size, a.out.display());
    Ok(())
}

/// `m.ckpt` → `m.history.csv`.
pub fn history_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("history.csv")
}

fn train(a: TrainArgs) -> CmdResult {
    let unet = UNetConfig::new(a.model.depth, a.model.base_channels);
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
        split_ratio: a.split,
        augment: !a.no_augment,
        threshold: a.threshold,
        adam: AdamConfig {
            learning_rate: a.lr,
            ..AdamConfig::default()
        },
    };
    let ds = load_dataset(&a.data)?;
    eprintln!("loaded {} samples from {}", ds.len(), a.data.display());
    let start = Instant::now();
    let out = train_observed::<f32>(&cfg, ds.samples(), unet, |e| match e {
        TrainEvent::Split { train, test } => eprintln!("split ratio={} seed={} train={train} test={test}", cfg.split_ratio, cfg.seed),
        TrainEvent::Epoch { record, report } => eprintln!(
            "epoch {}/{} loss={:.6} test {} pooled_iou={:.6} [{:.1}s]",
            record.epoch,
            cfg.epochs,
            record.train_loss,
            report,
            report.pooled_iou,
            start.elapsed().as_secs_f64()
        ),
    })?;
    save_checkpoint(&a.out, &out.params)?;
    let hist = history_path(&a.out);
    write_file(&hist, out.history.to_csv().as_bytes())?;
    eprintln!("wrote {} and {}", a.out.display(), hist.display());
    if let Some(report) = out.final_report {
        println!("{report}");
    }
    Ok(())
}

fn predict(a: PredictArgs) -> CmdResult {
    let params = load_checkpoint(&a.model)?;
    let frame = load_grayscale(&a.image)?;
    let start = Instant::now();
    let pred = predict_frame(&params, &frame, a.tile, a.threshold)?;
    let g = pred.grid;
    eprintln!(
        "frame {}x{} tile {} grid {}x{} padded {}x{} tiles={} [{:.1}s]",
        frame.width(),
        frame.height(),
        g.tile,
        g.cols,
        g.rows,
        g.padded_width(),
        g.padded_height(),
        g.tile_count(),
        start.elapsed().as_secs_f64()
    );
    save_mask(&a.out, &pred.mask)?;
    println!(
        "wrote {} width={} height={} foreground={}",
        a.out.display(),
        pred.mask.width(),
        pred.mask.height(),
        pred.mask.foreground()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> CmdResult {
    let params = load_checkpoint(&a.model)?;
    let ds = load_dataset(&a.data)?;
    let samples = match a.split {
        Some(ratio) => {
            let (train, test) = split_dataset(ds.into_samples(), ratio, a.seed)?;
            eprintln!("split ratio={ratio} seed={} train={} test={}", a.seed, train.len(), test.len());
            test
        }
        None => ds.into_samples(),
    };
    let report = evaluate(&params, &samples, a.threshold)?;
    eprintln!("images={} pooled_iou={:.6}", report.images, report.pooled_iou);
    println!("{report}");
    Ok(())
}

/// Negates the largest-magnitude analytic gradient entry.
struct Sabotaged<O>(O);

impl<O: Objective> Objective for Sabotaged<O> {
    fn value(&self, theta: &[f64]) -> cordseg_core::Result<f64> {
        self.0.value(theta)
    }

    fn gradient(&self, theta: &[f64]) -> cordseg_core::Result<Vec<f64>> {
        let mut g = self.0.gradient(theta)?;
        if let Some(i) = (0..g.len()).max_by(|&i, &j| g[i].abs().total_cmp(&g[j].abs())) {
            g[i] = -g[i];
        }
        Ok(g)
    }
}

fn gradcheck(a: GradcheckArgs) -> CmdResult {
    let cfg = UNetConfig::new(1, 2);
    let loss = seeded_unet_loss(cfg, 8, a.seed)?;
    let theta = loss.theta();
    let start = Instant::now();
    let refine_below = a.tolerance / 10.0;
    let min_step = MIN_REFINED_STEP.min(a.step);
    let report = if a.sabotage {
        finite_diff_check_refined(&Sabotaged(loss), &theta, a.step, min_step, refine_below)?
    } else {
        finite_diff_check_refined(&loss, &theta, a.step, min_step, refine_below)?
    };
    eprintln!(
        "depth={} base={} input=8x8 seed={} params={} refined={} [{:.2}s]",
        cfg.depth,
        cfg.base_channels,
        a.seed,
        theta.len(),
        report.refined,
        start.elapsed().as_secs_f64()
    );
    println!("max_rel_error={:.3e} worst_index={}", report.max_rel_error, report.worst_index);
    if report.max_rel_error < a.tolerance {
        Ok(())
    } else {
        let i = report.worst_index;
        Err(Failure {
            code: 1,
            message: format!(
                "gradient check failed at parameter {i}: analytic {:.6e} vs numeric {:.6e}",
                report.analytic[i], report.numeric[i]
            ),
        })
    }
}
