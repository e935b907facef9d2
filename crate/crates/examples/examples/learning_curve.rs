//! Response probability over repeated tries.

use learnsim_core::{learning_curve, minimal_tries};

fn main() {
    let agents = [("keen", 0.9, 0.5), ("average", 0.71, 0.74), ("reluctant", 0.45, 0.2)];
    let p_th = 0.85;

    print!("{:>10}", "tries");
    for (name, _, _) in &agents {
        print!("{name:>11}");
    }
    println!();
    for t in [0, 1, 2, 4, 6, 10, 20, 50] {
        print!("{t:>10}");
        for &(_, a, esa) in &agents {
            print!("{:>11.4}", learning_curve(a, esa, t).unwrap());
        }
        println!();
    }

    for &(name, a, esa) in &agents {
        match minimal_tries(a, esa, p_th) {
            Some(t) => println!("{name}: experienced after {t} tries"),
            None => println!("{name}: attitude {a} never reaches {p_th}"),
        }
    }
}
