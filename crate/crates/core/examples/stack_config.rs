//! Builds a stack in code, writes it as TOML and loads it back.
//!
//! Run with `cargo run --example stack_config`.

use baw::materials::{derive_constants, load_stack, to_toml, Boundaries, Layer, Role, Stack};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nominal = load_stack(include_str!("../data/nominal_stack.toml"))?;
    let mut layers: Vec<Layer> = nominal.layers().to_vec();
    layers[0].thickness = 120e-9;
    let stack = Stack::new(layers, nominal.area(), 1.0, Boundaries::default())?;

    let text = to_toml(&stack);
    println!("{text}");
    let back = load_stack(&text)?;
    assert_eq!(back, stack);

    let c = derive_constants(&back);
    println!("C0 = {:.4e} F, piezo kt2 = {:.3} %", c.c0, 100.0 * stack.piezo().material.kt2());
    for layer in back.layers() {
        let role = match layer.role {
            Role::Piezo => "piezo",
            _ => "passive",
        };
        println!("{:<10} {:>6.1} nm {role}", layer.material.name, layer.thickness * 1e9);
    }
    Ok(())
}
