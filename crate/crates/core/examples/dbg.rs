use kqfactor_core::atoms::{fixture, FixtureName};
use kqfactor_core::matrix_norms::omega_primal_oracle;

fn main() {
    for (name, m) in [
        ("ones3", fixture(FixtureName::Ones3)),
        ("psd", fixture(FixtureName::PsdExample)),
        ("half4", fixture(FixtureName::HalfOnes4)),
    ] {
        match omega_primal_oracle(&m, 2, 2, 2000, 1e-6) {
            Ok(r) => println!("{name}: value={:.8} gap={:.3e} iters={}", r.value, r.gap, r.iterations),
            Err(e) => println!("{name}: ERR {e}"),
        }
    }
}
