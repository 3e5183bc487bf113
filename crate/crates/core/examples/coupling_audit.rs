//! One coupled trajectory of the colored and two-species systems, checked
//! after every event.

use asep_lab::{make_window, CoupledState, LabelKind, ModelParams, RngStream};

fn main() -> Result<(), asep_lab::Error> {
    let params = ModelParams::new(0.7, 2)?;
    let t = 30.0;
    let mut state = CoupledState::new(params, make_window(t, 2, 3.0))?;
    let mut held = true;
    let mut label_swaps = 0;
    let mut last = state.status().clone();
    let stats = state.run_until_with(t, &mut RngStream::new(1, 0), |s, _| {
        held &= s.check_identity() && s.check_projection();
        if *s.status() != last {
            label_swaps += 1;
            last = s.status().clone();
        }
    })?;
    state.check_labels()?;

    println!("{} events, {} accepted, {label_swaps} label exchanges", stats.events, stats.accepted);
    println!("identity and projection held after every event: {held}");
    println!(
        "leftmost second class {} = leftmost of colors 1..=3 {}",
        state.two_species().leftmost_second_class()?,
        state.colored().leftmost_of_colors((1..=3).map(asep_lab::Color))?
    );
    let second: Vec<String> = state
        .status()
        .colors()
        .filter(|(_, label)| label.kind == LabelKind::Second)
        .map(|(c, label)| format!("color {c} -> {label}"))
        .collect();
    println!("second-class pairing: {}", second.join(", "));
    Ok(())
}
