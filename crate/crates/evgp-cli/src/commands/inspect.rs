use evgp::storage::ModelFile;

use crate::args::InspectArgs;
use crate::CliError;

/// Print the learned feature weights `b` as a labeled matrix
/// (feature rows x output columns) with the posterior standard
/// deviation of each entry from the diagonal of `B`.
pub fn run(args: InspectArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    let states = model.to_states()?;
    let features = model.feature_map.feature_names();
    if features.is_empty() {
        println!(
            "model {} has no explicit features (zero-mean baseline)",
            args.model.display()
        );
        return Ok(());
    }

    let mut stds = Vec::with_capacity(states.len());
    for state in &states {
        let b_cov = state.beta_cov.to_psd().map_err(evgp::Error::from)?;
        stds.push(b_cov.reconstruct().diagonal().map(|v| v.max(0.0).sqrt()));
    }

    println!("learned feature weights (posterior mean +- std per output)");
    print!("{:<10}", "feature");
    for name in &model.target_names {
        print!(" {name:>22}");
    }
    println!();
    for (i, fname) in features.iter().enumerate() {
        print!("{fname:<10}");
        for (state, std) in states.iter().zip(&stds) {
            print!(" {:>12.4} +- {:<7.4}", state.beta_mean[i], std[i]);
        }
        println!();
    }

    if let Some(csv_path) = &args.csv {
        let mut out = String::from("feature,output,mean,std\n");
        for (i, fname) in features.iter().enumerate() {
            for (o, (state, std)) in states.iter().zip(&stds).enumerate() {
                let target = model
                    .target_names
                    .get(o)
                    .cloned()
                    .unwrap_or_else(|| format!("output{o}"));
                out.push_str(&format!(
                    "{fname},{target},{:.12e},{:.12e}\n",
                    state.beta_mean[i], std[i]
                ));
            }
        }
        std::fs::write(csv_path, out)?;
        println!("weight table written to {}", csv_path.display());
    }
    Ok(())
}
