//! Fixed facts about the design method: the steps of an iteration and the
//! tables two of them must produce.

/// First and last step of a design iteration. Step 1 (reviewing the
/// drivers) happens once, before any iteration.
pub const FIRST_STEP: u8 = 2;
pub const LAST_STEP: u8 = 7;

/// Heading text for an iteration step.
pub fn step_title(step: u8) -> &'static str {
    match step {
        1 => "Review Inputs",
        2 => "Establish Iteration Goal by Selecting Drivers",
        3 => "Choose One or More Elements of the System to Refine",
        4 => "Choose One or More Design Concepts That Satisfy the Selected Drivers",
        5 => "Instantiate Architectural Elements, sketch views, allocate Responsibilities, and Define Interfaces",
        6 => "Record Design Decisions and Refine Preliminary Views",
        7 => "Perform Analysis of Current Design and Review Iteration Goal and Achievement of Design Purpose",
        _ => "",
    }
}

pub fn step_heading(step: u8) -> String {
    format!("Step {step}: {}", step_title(step))
}

pub fn is_iteration_step(step: u8) -> bool {
    (FIRST_STEP..=LAST_STEP).contains(&step)
}
