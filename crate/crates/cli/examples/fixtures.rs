//! Writes the input files used by the CLI golden tests and the README.
//!
//! `cargo run -p sigcert-cli --example fixtures -- crates/cli/tests/data`

use std::fs;
use std::path::PathBuf;

use sigcert_core::qlinalg::{
    assemblage_from, isotropic_state, pauli_measurements, qutrit_signalling_assemblage, standard_behavior,
    StandardBehavior,
};
use sigcert_core::scenario::{chsh_coefficients, CountsTable, Scenario, SignallingBudget};
use sigcert_core::witness::mub_witness;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/tests/data".into()));
    fs::create_dir_all(&dir)?;
    let write = |name: &str, text: String| fs::write(dir.join(name), text + "\n");

    write("ideal_chsh.json", standard_behavior(StandardBehavior::IdealQuantumChsh).to_json()?)?;
    write("pr_box.json", standard_behavior(StandardBehavior::PrBox).to_json()?)?;
    write("uniform.json", standard_behavior(StandardBehavior::Uniform).to_json()?)?;
    write("budget_005.json", SignallingBudget::uniform(Scenario::chsh(), 0.05)?.to_json()?)?;
    write("chsh_coeffs.json", serde_json::to_string(&chsh_coefficients())?)?;

    // Outcome-dependent losses on a correlated source: ∅ is the last index.
    let s = Scenario::chsh();
    let mut counts = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    let base: u64 = if a == 2 || b == 2 { 40 } else if (a + b + x * y) % 2 == 0 { 400 } else { 90 };
                    counts.push(base + (a as u64) * 13 + (b as u64) * 7);
                }
            }
        }
    }
    write("counts.json", CountsTable::new(s, counts)?.to_json()?)?;

    let pauli = assemblage_from(&isotropic_state(2, 0.9)?, &pauli_measurements())?;
    write("pauli_iso_09.json", pauli.to_json()?)?;
    write("qutrit_k05.json", qutrit_signalling_assemblage(1.0, 0.5)?.to_json()?)?;
    write("qutrit_k0.json", qutrit_signalling_assemblage(1.0, 0.0)?.to_json()?)?;
    write("mub3.json", mub_witness(3)?.to_json()?)?;
    Ok(())
}
