use serde::{Deserialize, Serialize};

use super::markdown::{scan, Block};
use super::table::Table;
use super::{DocError, DriverId, ParseWarning, Parsed, ToMarkdown};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedIteration {
    pub number: u32,
    pub goal: String,
    pub driver_refs: Vec<DriverId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationPlan {
    pub iterations: Vec<PlannedIteration>,
}

impl IterationPlan {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn get(&self, number: u32) -> Option<&PlannedIteration> {
        self.iterations.iter().find(|i| i.number == number)
    }

    /// The iteration planned after `number`, if any.
    pub fn after(&self, number: u32) -> Option<&PlannedIteration> {
        self.iterations.iter().find(|i| i.number > number)
    }

    pub fn first(&self) -> Option<&PlannedIteration> {
        self.iterations.first()
    }

    pub fn last_number(&self) -> Option<u32> {
        self.iterations.last().map(|i| i.number)
    }

    /// Every iteration that lists `id`.
    pub fn iterations_for<'a>(&'a self, id: &'a DriverId) -> impl Iterator<Item = u32> + 'a {
        self.iterations
            .iter()
            .filter(move |i| i.driver_refs.contains(id))
            .map(|i| i.number)
    }
}

fn is_plan_table(table: &Table) -> bool {
    let h = table.normalized_headers();
    h.iter().any(|x| x.contains("iteration")) && h.iter().any(|x| x.contains("goal"))
}

fn leading_number(cell: &str) -> Option<u32> {
    let digits: String = cell
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok()
}

/// Parses the first iteration-plan table (headers mentioning "iteration" and
/// "goal"). A body row with both the number and goal cells empty continues
/// the previous row's driver list, as happens when a table breaks across
/// pages.
pub fn parse_iteration_plan(doc: &str) -> Result<Parsed<IterationPlan>, DocError> {
    let mut warnings = Vec::new();
    let blocks = scan(doc, &mut warnings);
    let mut tables = blocks.iter().filter_map(|b| match b {
        Block::Table { table, line, .. } if is_plan_table(table) => Some((table, *line)),
        _ => None,
    });
    let Some((table, line)) = tables.next() else {
        return Ok(Parsed {
            value: IterationPlan::default(),
            warnings,
        });
    };
    if let Some((_, extra)) = tables.next() {
        warnings.push(ParseWarning::new(extra, "more than one plan table; only the first is used"));
    }

    let h = table.normalized_headers();
    let num_col = h.iter().position(|x| x.contains("iteration")).unwrap();
    let goal_col = h.iter().position(|x| x.contains("goal")).unwrap();
    let drivers_col = h
        .iter()
        .position(|x| x.contains("driver"))
        .unwrap_or(h.len() - 1);

    let mut iterations: Vec<PlannedIteration> = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        let lineno = line + 2 + r;
        let refs = if drivers_col == num_col || drivers_col == goal_col {
            Vec::new()
        } else {
            DriverId::extract_all(&row[drivers_col])
        };
        let num_cell = row[num_col].trim();
        let goal = row[goal_col].trim();
        if num_cell.is_empty() && goal.is_empty() {
            match iterations.last_mut() {
                Some(prev) => {
                    for id in refs {
                        if !prev.driver_refs.contains(&id) {
                            prev.driver_refs.push(id);
                        }
                    }
                }
                None => warnings.push(ParseWarning::new(lineno, "continuation row before any iteration; ignored")),
            }
            continue;
        }
        let expected_min = iterations.last().map_or(1, |p| p.number + 1);
        let number = leading_number(num_cell).filter(|&n| {
            if iterations.is_empty() {
                n == 1
            } else {
                n >= expected_min
            }
        });
        let Some(number) = number else {
            return Err(DocError::NonmonotonicIterations {
                expected: expected_min,
                found: num_cell.to_string(),
                line: lineno,
            });
        };
        if goal.is_empty() {
            return Err(DocError::EmptyGoal { iteration: number });
        }
        iterations.push(PlannedIteration {
            number,
            goal: goal.to_string(),
            driver_refs: refs,
        });
    }
    if let Some(empty) = iterations.iter().find(|i| i.driver_refs.is_empty()) {
        return Err(DocError::MissingDriverRefs {
            iteration: empty.number,
        });
    }
    Ok(Parsed {
        value: IterationPlan { iterations },
        warnings,
    })
}

impl ToMarkdown for IterationPlan {
    fn to_markdown(&self) -> String {
        let mut table = Table::new(["Iteration", "Goal", "Drivers to Address"]);
        for it in &self.iterations {
            let refs: Vec<&str> = it.driver_refs.iter().map(DriverId::as_str).collect();
            table.rows.push(vec![it.number.to_string(), it.goal.clone(), refs.join(", ")]);
        }
        format!("# Iteration Plan\n\n{}", table.to_markdown())
    }
}
