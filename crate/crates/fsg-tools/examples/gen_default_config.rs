//! Regenerates the bundled simulator configuration:
//!
//! ```sh
//! cargo run -p fsg-tools --example gen_default_config > configs/default_sim.json
//! ```

use fsg_core::allocsim::standard_mix_config;
use fsg_tools::simconfig::SimConfigFile;

fn main() {
    let cfg = standard_mix_config(1000);
    println!("{}", SimConfigFile::from_config(&cfg).to_json_pretty());
}
