//! The identity suite over the whole catalog.

use curvestab::catalog::{get_entry, CATALOG_NAMES};
use curvestab::expr::ParamEnv;
use curvestab::identities::{run_identities, RowStatus, SuiteConfig};

#[test]
fn every_catalog_entry_passes_the_suite() {
    let cfg = SuiteConfig::default();
    for name in CATALOG_NAMES {
        let report = run_identities(&get_entry(name, &ParamEnv::new()).unwrap(), &cfg);
        for row in &report.rows {
            assert_ne!(row.status, RowStatus::Fail, "{name}: {} residual {:?} ({})", row.name, row.residual, row.note);
        }
        let eigen = report.row("eigen_relation").unwrap().status;
        let destabilizable = matches!(name, "schwarzschild" | "kerr" | "taub_bolt" | "page");
        assert_eq!(eigen == RowStatus::Pass, destabilizable, "{name}: eigen_relation {eigen:?}");
        assert_eq!(report.row("p_conformal_covariance").unwrap().status, RowStatus::Pass, "{name}");
    }
}
