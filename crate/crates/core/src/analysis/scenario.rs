use serde::{Deserialize, Serialize};

use crate::telemetry::{cursor_prefix, same_line_suffix, TelemetryRecord};

/// How a developer used completion relative to the code right of the cursor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Nothing right of the cursor: predict the rest of the line.
    FullLine,
    /// Insert between the cursor and existing same-line code, which is kept verbatim.
    PartialLine,
    /// The final line changed the code around the cursor.
    LineEdit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum NotClassifiable {
    #[error("record has no stored context")]
    NoContext,
    #[error("record has no ground truth")]
    NoGroundTruth,
}

pub fn classify_scenario(record: &TelemetryRecord) -> Result<Scenario, NotClassifiable> {
    let (Some(left), Some(right)) = (&record.left_context, &record.right_context) else {
        return Err(NotClassifiable::NoContext);
    };
    let line = record.ground_truth_line.as_deref().ok_or(NotClassifiable::NoGroundTruth)?;
    let same_line_right = same_line_suffix(right);
    if same_line_right.trim().is_empty() {
        return Ok(Scenario::FullLine);
    }
    let prefix = cursor_prefix(left);
    let preserved = line.len() >= prefix.len() + same_line_right.len()
        && line.starts_with(prefix)
        && line.ends_with(same_line_right);
    Ok(if preserved { Scenario::PartialLine } else { Scenario::LineEdit })
}
