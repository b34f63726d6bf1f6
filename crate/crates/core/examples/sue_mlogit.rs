//! Computes earnings surprises from the fixture earnings file, buckets them
//! into three outcomes and fits a multinomial logit on the controls.
//!
//! `cargo run --example sue_mlogit`

use std::fs::File;
use std::path::Path;

use finmwe::econ::{
    design_matrix, fit_mlogit, merge_firm_years, read_earnings, sue_table, CovFlavor, MlogitConfig, PanelConfig,
    RegressionReport,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let rows = read_earnings(File::open(data.join("earnings.csv"))?)?;
    let (sue, degenerate) = sue_table(&rows)?;
    println!("{} firm-years with a surprise, degenerate firms: {:?}", sue.len(), degenerate);
    for ((firm, year), s) in sue.iter().take(5) {
        println!("  {firm} {year}: {s:+.3}");
    }

    let filings: Vec<(String, i32)> = rows
        .iter()
        .filter(|r| r.fiscal_year >= 2000)
        .map(|r| (r.company_id.clone(), r.fiscal_year))
        .collect();
    for tau in [0.25, 0.5, 1.0] {
        let cfg = PanelConfig {
            tau,
            controls: vec!["bm".into(), "size".into()],
            fill_lag_sue: false,
        };
        let panel = merge_firm_years(&filings, &rows, &cfg)?;
        let mut counts = [0usize; 3];
        for r in &panel.rows {
            counts[(r.outcome + 1) as usize] += 1;
        }
        println!("\ntau {tau}: kept {} of {}, outcomes -1/0/+1 = {:?}", panel.report.kept, filings.len(), counts);

        let design = design_matrix(&panel, None, &[])?;
        let fit = fit_mlogit(&design.x, &design.y, &design.columns, &MlogitConfig::default())?;
        println!("log-likelihood {:.4} after {} iterations", fit.log_likelihood, fit.iterations);
        let report = RegressionReport::from_fit(&fit, design.n_controls, CovFlavor::Robust, 0.1, tau, counts);
        print!("{}", report.to_tsv());
    }
    Ok(())
}
