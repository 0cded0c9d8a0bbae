//! Regenerate the recipe-sensitivity report committed at
//! `docs/sensitivity.md`.
//!
//! ```bash
//! cargo run -p thresholdnet --example sensitivity_sweep > docs/sensitivity.md
//! ```

use thresholdnet::sweep::sensitivity_report;

fn main() {
    print!("{}", sensitivity_report());
}
