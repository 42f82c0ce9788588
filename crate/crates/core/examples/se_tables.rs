//! Small standard-error tables for both kernels and both eps regimes, with
//! the fitted m-slopes.

use mixchain::diagnostics::{scaling_fit, se_table, EpsRule, SeTableConfig};
use mixchain::model::{MixtureFamily, PriorParams};
use mixchain::samplers::{KernelKind, ProposalKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for rule in [EpsRule::Fixed(1.0), EpsRule::NPow(-0.25)] {
        for kernel in [KernelKind::Da, KernelKind::Imh(ProposalKind::QuasiMoment)] {
            let table = se_table(&SeTableConfig {
                family: MixtureFamily::location_normal(1.0, 1.0)?,
                eps_rule: rule,
                n_list: vec![10, 100],
                m_list: vec![100, 1000, 10_000],
                replications: Some(200),
                kernel,
                prior: PriorParams::default(),
                theta_true: 0.0,
                seed: 1,
            })?;
            println!("{kernel}, eps = {rule}");
            for c in &table.cells {
                println!("  n={:<4} m={:<6} se {:.4} ({:.4})", c.n, c.m, c.se, c.mc_se);
            }
            for (n, s) in scaling_fit(&table)?.slopes {
                println!("  slope in m at n={n}: {s:.3}");
            }
        }
    }
    Ok(())
}
