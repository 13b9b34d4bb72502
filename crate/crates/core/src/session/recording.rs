//! Skeletal recordings of demonstrated gestures.
//!
//! A recording holds only normalized 2-D joint positions for a fixed
//! 13-joint body skeleton. Unknown fields are rejected at parse time, so
//! image, pixel, or face-landmark payloads cannot ride along.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const JOINT_SET_BODY13: &str = "body13";

/// Head plus shoulders, elbows, wrists, hips, knees, and ankles.
pub const BODY13: [&str; 13] = [
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub t_ms: u64,
    pub joints: Vec<Joint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletalRecording {
    pub joint_set: String,
    pub fps_nominal: u32,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum RecordingViolation {
    UnsupportedJointSet { joint_set: String },
    ZeroFps,
    TooFewFrames { count: usize },
    NonMonotoneTimestamps { frame: usize, t_ms: u64, previous_t_ms: u64 },
    UnknownJoint { frame: usize, name: String },
    DuplicateJoint { frame: usize, name: String },
    MissingJoint { frame: usize, name: String },
    CoordinateOutOfRange { frame: usize, joint: String, axis: Axis, value: f64 },
    ConfidenceOutOfRange { frame: usize, joint: String, value: f64 },
}

impl RecordingViolation {
    pub fn name(&self) -> &'static str {
        match self {
            RecordingViolation::UnsupportedJointSet { .. } => "UnsupportedJointSet",
            RecordingViolation::ZeroFps => "ZeroFps",
            RecordingViolation::TooFewFrames { .. } => "TooFewFrames",
            RecordingViolation::NonMonotoneTimestamps { .. } => "NonMonotoneTimestamps",
            RecordingViolation::UnknownJoint { .. } => "UnknownJoint",
            RecordingViolation::DuplicateJoint { .. } => "DuplicateJoint",
            RecordingViolation::MissingJoint { .. } => "MissingJoint",
            RecordingViolation::CoordinateOutOfRange { .. } => "CoordinateOutOfRange",
            RecordingViolation::ConfidenceOutOfRange { .. } => "ConfidenceOutOfRange",
        }
    }
}

impl fmt::Display for RecordingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordingViolation::UnsupportedJointSet { joint_set } => {
                write!(f, "UnsupportedJointSet: `{joint_set}` (expected `body13`)")
            }
            RecordingViolation::ZeroFps => write!(f, "ZeroFps: fps_nominal must be positive"),
            RecordingViolation::TooFewFrames { count } => {
                write!(f, "TooFewFrames: {count} frame(s), at least 2 required")
            }
            RecordingViolation::NonMonotoneTimestamps {
                frame,
                t_ms,
                previous_t_ms,
            } => write!(
                f,
                "NonMonotoneTimestamps: frame {frame} at {t_ms} ms does not follow {previous_t_ms} ms"
            ),
            RecordingViolation::UnknownJoint { frame, name } => {
                write!(f, "UnknownJoint: `{name}` in frame {frame} is not a body13 joint")
            }
            RecordingViolation::DuplicateJoint { frame, name } => {
                write!(f, "DuplicateJoint: `{name}` repeated in frame {frame}")
            }
            RecordingViolation::MissingJoint { frame, name } => {
                write!(f, "MissingJoint: `{name}` absent from frame {frame}")
            }
            RecordingViolation::CoordinateOutOfRange {
                frame,
                joint,
                axis,
                value,
            } => write!(
                f,
                "CoordinateOutOfRange: {joint}.{} = {value} in frame {frame} is outside [0, 1]",
                match axis {
                    Axis::X => "x",
                    Axis::Y => "y",
                }
            ),
            RecordingViolation::ConfidenceOutOfRange { frame, joint, value } => write!(
                f,
                "ConfidenceOutOfRange: {joint}.confidence = {value} in frame {frame} is outside [0, 1]"
            ),
        }
    }
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl SkeletalRecording {
    /// First violated invariant, checked frame by frame.
    pub fn validate(&self) -> Result<(), RecordingViolation> {
        if self.joint_set != JOINT_SET_BODY13 {
            return Err(RecordingViolation::UnsupportedJointSet {
                joint_set: self.joint_set.clone(),
            });
        }
        if self.fps_nominal == 0 {
            return Err(RecordingViolation::ZeroFps);
        }
        if self.frames.len() < 2 {
            return Err(RecordingViolation::TooFewFrames {
                count: self.frames.len(),
            });
        }
        for (i, frame) in self.frames.iter().enumerate() {
            if i > 0 && frame.t_ms <= self.frames[i - 1].t_ms {
                return Err(RecordingViolation::NonMonotoneTimestamps {
                    frame: i,
                    t_ms: frame.t_ms,
                    previous_t_ms: self.frames[i - 1].t_ms,
                });
            }
            let mut seen = HashSet::new();
            for joint in &frame.joints {
                if !BODY13.contains(&joint.name.as_str()) {
                    return Err(RecordingViolation::UnknownJoint {
                        frame: i,
                        name: joint.name.clone(),
                    });
                }
                if !seen.insert(joint.name.as_str()) {
                    return Err(RecordingViolation::DuplicateJoint {
                        frame: i,
                        name: joint.name.clone(),
                    });
                }
                for (axis, value) in [(Axis::X, joint.x), (Axis::Y, joint.y)] {
                    if !unit(value) {
                        return Err(RecordingViolation::CoordinateOutOfRange {
                            frame: i,
                            joint: joint.name.clone(),
                            axis,
                            value,
                        });
                    }
                }
                if !unit(joint.confidence) {
                    return Err(RecordingViolation::ConfidenceOutOfRange {
                        frame: i,
                        joint: joint.name.clone(),
                        value: joint.confidence,
                    });
                }
            }
            if let Some(missing) = BODY13.iter().find(|n| !seen.contains(*n)) {
                return Err(RecordingViolation::MissingJoint {
                    frame: i,
                    name: missing.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> u64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t_ms - a.t_ms,
            _ => 0,
        }
    }

    /// A standing figure waving its right forearm, sampled at `fps`.
    /// Deterministic; used by the demo and tests.
    pub fn synthetic_wave(frame_count: usize, fps: u32) -> Self {
        let rest: [(f64, f64); 13] = [
            (0.50, 0.12),
            (0.40, 0.25),
            (0.60, 0.25),
            (0.36, 0.40),
            (0.64, 0.40),
            (0.35, 0.54),
            (0.66, 0.54),
            (0.44, 0.56),
            (0.56, 0.56),
            (0.44, 0.74),
            (0.56, 0.74),
            (0.44, 0.92),
            (0.56, 0.92),
        ];
        let frames = (0..frame_count)
            .map(|i| {
                let t_ms = (i as u64 * 1000) / fps.max(1) as u64;
                let phase = i as f64 / fps.max(1) as f64 * std::f64::consts::TAU;
                let joints = BODY13
                    .iter()
                    .zip(rest)
                    .map(|(name, (x, y))| {
                        let (x, y) = match *name {
                            "right_elbow" => (0.70, 0.30),
                            "right_wrist" => (0.74 + 0.06 * phase.sin(), 0.16 + 0.02 * phase.cos()),
                            _ => (x, y),
                        };
                        Joint {
                            name: name.to_string(),
                            x,
                            y,
                            confidence: 0.9,
                        }
                    })
                    .collect();
                Frame { t_ms, joints }
            })
            .collect();
        Self {
            joint_set: JOINT_SET_BODY13.to_string(),
            fps_nominal: fps,
            frames,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn good() -> SkeletalRecording {
        SkeletalRecording::synthetic_wave(60, 30)
    }

    #[test]
    fn sixty_frames_at_thirty_fps_is_valid() {
        let r = good();
        assert_eq!(r.frames.len(), 60);
        assert_eq!(r.validate(), Ok(()));
        assert_eq!(r.duration_ms(), 1966);
    }

    #[test]
    fn non_monotone_timestamps() {
        let mut r = good();
        r.frames[10].t_ms = r.frames[9].t_ms;
        assert_eq!(r.validate().unwrap_err().name(), "NonMonotoneTimestamps");
    }

    #[test]
    fn facial_joint_rejected() {
        let mut r = good();
        r.frames[3].joints.push(Joint {
            name: "left_eye".into(),
            x: 0.5,
            y: 0.1,
            confidence: 1.0,
        });
        assert_eq!(
            r.validate(),
            Err(RecordingViolation::UnknownJoint {
                frame: 3,
                name: "left_eye".into()
            })
        );
    }

    #[test]
    fn coordinate_range() {
        let mut r = good();
        r.frames[0].joints[4].y = 1.2;
        assert!(matches!(
            r.validate(),
            Err(RecordingViolation::CoordinateOutOfRange { axis: Axis::Y, .. })
        ));
    }

    #[test]
    fn other_guards() {
        let mut r = good();
        r.frames.truncate(1);
        assert_eq!(r.validate(), Err(RecordingViolation::TooFewFrames { count: 1 }));

        let mut r = good();
        r.frames[2].joints.remove(0);
        assert_eq!(r.validate().unwrap_err().name(), "MissingJoint");

        let mut r = good();
        let dup = r.frames[2].joints[1].clone();
        r.frames[2].joints[0] = dup;
        assert_eq!(r.validate().unwrap_err().name(), "DuplicateJoint");

        let mut r = good();
        r.joint_set = "coco17".into();
        assert_eq!(r.validate().unwrap_err().name(), "UnsupportedJointSet");

        let mut r = good();
        r.fps_nominal = 0;
        assert_eq!(r.validate(), Err(RecordingViolation::ZeroFps));

        let mut r = good();
        r.frames[1].joints[0].confidence = -0.1;
        assert_eq!(r.validate().unwrap_err().name(), "ConfidenceOutOfRange");
    }

    #[test]
    fn image_payload_cannot_parse() {
        let mut v = serde_json::to_value(good()).unwrap();
        v["image"] = serde_json::json!("data:image/png;base64,AAAA");
        assert!(serde_json::from_value::<SkeletalRecording>(v).is_err());

        let mut v = serde_json::to_value(good()).unwrap();
        v["frames"][0]["pixels"] = serde_json::json!([0, 0, 0]);
        assert!(serde_json::from_value::<SkeletalRecording>(v).is_err());
    }
}
