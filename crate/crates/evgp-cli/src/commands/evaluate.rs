use std::path::Path;

use evgp::dataset::Dataset;
use evgp::metrics::{evaluate, EvalReport};
use evgp::model::multi_output_predict;
use evgp::storage::ModelFile;

use crate::args::EvaluateArgs;
use crate::CliError;

fn evaluate_model(path: &Path, data: &Dataset) -> Result<EvalReport, CliError> {
    let model = ModelFile::load(path)?;
    model.check_schema(data)?;
    let states = model.to_states()?;
    let preds = multi_output_predict(&states, model.feature_map, data.inputs(), true, true)?;
    Ok(evaluate(&preds, data.targets())?)
}

fn print_report(label: &str, r: &EvalReport) {
    println!("{label}");
    println!(
        "  n = {}  error = {:.6}  ||STD|| = {:.6}  CR-1/2/3 = {:.3}/{:.3}/{:.3}",
        r.n_eval, r.error, r.std_norm, r.cr1, r.cr2, r.cr3
    );
    for (i, po) in r.per_output.iter().enumerate() {
        println!(
            "  output {i}: |err| = {:.6}  std = {:.6}  CR-1/2/3 = {:.3}/{:.3}/{:.3}",
            po.mean_abs_error, po.mean_std, po.cr1, po.cr2, po.cr3
        );
    }
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let data = Dataset::read_csv(&args.data)?;
    match (&args.model, &args.compare) {
        (Some(model_path), None) => {
            let report = evaluate_model(model_path, &data)?;
            print_report(&model_path.display().to_string(), &report);
            if let Some(out) = &args.out {
                std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
            }
        }
        (None, Some(paths)) => {
            let a = evaluate_model(&paths[0], &data)?;
            let b = evaluate_model(&paths[1], &data)?;
            println!(
                "{:<28} {:>10} {:>10} {:>8} {:>8} {:>8}",
                "model", "Error", "||STD||", "CR-1", "CR-2", "CR-3"
            );
            for (path, r) in [(&paths[0], &a), (&paths[1], &b)] {
                println!(
                    "{:<28} {:>10.6} {:>10.6} {:>8.3} {:>8.3} {:>8.3}",
                    path.display().to_string(),
                    r.error,
                    r.std_norm,
                    r.cr1,
                    r.cr2,
                    r.cr3
                );
            }
            if let Some(out) = &args.out {
                let pair: Vec<&EvalReport> = vec![&a, &b];
                std::fs::write(out, serde_json::to_string_pretty(&pair)?)?;
            }
        }
        _ => return Err(CliError::config("pass --model or --compare")),
    }
    Ok(())
}
