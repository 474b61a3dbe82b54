//! Synthetic recordings written in each dataset's published on-disk layout.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const G0: f64 = 9.80665;

/// Specific force (m/s²) and angular rate (rad/s) for `class` at sample `t`.
/// Classes differ in a channel offset and a sinusoid frequency.
pub fn class_sample(class: usize, subject: usize, t: usize, rate: f64, rng: &mut ChaCha8Rng) -> [f64; 6] {
    let noise = Normal::new(0.0, 0.2).unwrap();
    let gain = 1.0 + 0.05 * subject as f64;
    let phase = 2.0 * PI * (0.5 + 0.5 * class as f64) * t as f64 / rate;
    let mut c = [0.0, 0.0, G0, 0.0, 0.0, 0.0];
    c[0] += gain * phase.sin();
    c[3] += 0.5 * gain * phase.cos();
    c[class % 6] += 1.5;
    if class >= 6 {
        c[(class + 1) % 6] -= 1.5;
    }
    for v in &mut c {
        *v += noise.sample(rng);
    }
    c
}

pub fn stream(class: usize, subject: usize, len: usize, rate: f64, seed: u64) -> Vec<[f64; 6]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((class as u64) << 32) ^ ((subject as u64) << 16));
    (0..len).map(|t| class_sample(class, subject, t, rate, &mut rng)).collect()
}

pub const RIDI_PLACEMENTS: [&str; 4] = ["leg", "bag", "handheld", "body"];
pub const RIDI_SUBJECTS: [&str; 10] = ["dan", "hang", "huayi", "ma", "ruixuan", "tang", "xiaojing", "yajie", "zhicheng", "hao"];

/// `<root>/data_publish_v2/<subject>_<placement>1/processed/data.csv`.
pub fn write_ridi(root: &Path, subjects: usize, len: usize) {
    for (s, name) in RIDI_SUBJECTS.iter().take(subjects).enumerate() {
        for (c, place) in RIDI_PLACEMENTS.iter().enumerate() {
            let dir = root.join("data_publish_v2").join(format!("{name}_{place}1")).join("processed");
            fs::create_dir_all(&dir).unwrap();
            let mut text = String::from(",time,gyro_x,gyro_y,gyro_z,acce_x,acce_y,acce_z,pos_x\n");
            for (t, v) in stream(c, s, len, 200.0, 1).iter().enumerate() {
                text.push_str(&format!(
                    "{t},{},{},{},{},{},{},{},0.0\n",
                    t as f64 * 5e6,
                    v[3], v[4], v[5], v[0], v[1], v[2]
                ));
            }
            fs::write(dir.join("data.csv"), text).unwrap();
        }
    }
}

pub const MS_CODES: [&str; 6] = ["wlk", "jog", "sit", "std", "dws", "ups"];

/// `<root>/A_DeviceMotion_data/<code>_<trial>/sub_<n>.csv` with gravity and
/// user acceleration in g (negated specific force) and rotation in rad/s.
pub fn write_motionsense(root: &Path, subjects: usize, len: usize) {
    for (c, code) in MS_CODES.iter().enumerate() {
        let dir = root.join("A_DeviceMotion_data").join(format!("{code}_{}", c + 1));
        fs::create_dir_all(&dir).unwrap();
        for s in 0..subjects {
            let mut text = String::from(
                ",attitude.roll,attitude.pitch,attitude.yaw,gravity.x,gravity.y,gravity.z,rotationRate.x,rotationRate.y,rotationRate.z,userAcceleration.x,userAcceleration.y,userAcceleration.z\n",
            );
            for (t, v) in stream(c, s, len, 50.0, 2).iter().enumerate() {
                // Split -f/g0 between gravity (z only) and user acceleration.
                let g = [0.0, 0.0, -v[2] / G0];
                let u = [-v[0] / G0, -v[1] / G0, 0.0];
                text.push_str(&format!(
                    "{t},0,0,0,{},{},{},{},{},{},{},{},{}\n",
                    g[0], g[1], g[2], v[3], v[4], v[5], u[0], u[1], u[2]
                ));
            }
            fs::write(dir.join(format!("sub_{}.csv", s + 1)), text).unwrap();
        }
    }
}

/// UCI HAR activity ids in class order (walking, stairs_down, stairs_up,
/// sitting, standing, laying).
pub const HAR_IDS: [usize; 6] = [1, 3, 2, 4, 5, 6];

/// `<root>/UCI HAR Dataset/{train,test}/Inertial Signals/...`: each
/// (subject, activity) segment is a continuous stream cut into 128-sample
/// rows with 64-sample overlap. Odd subjects go to `test`.
pub fn write_uci_har(root: &Path, subjects: usize, rows_per_segment: usize) {
    let base = root.join("UCI HAR Dataset");
    let names = ["total_acc_x", "total_acc_y", "total_acc_z", "body_gyro_x", "body_gyro_y", "body_gyro_z"];
    for split in ["train", "test"] {
        let mut signals = vec![String::new(); 6];
        let mut ys = String::new();
        let mut subs = String::new();
        for s in (0..subjects).filter(|s| (s % 2 == 1) == (split == "test")) {
            for (c, id) in HAR_IDS.iter().enumerate() {
                let x = stream(c, s, 64 * (rows_per_segment + 1), 50.0, 3);
                for r in 0..rows_per_segment {
                    for (k, sig) in signals.iter_mut().enumerate() {
                        let scale = if k < 3 { 1.0 / G0 } else { 1.0 };
                        let row: Vec<String> = x[64 * r..64 * r + 128].iter().map(|v| format!("{:e}", v[k] * scale)).collect();
                        sig.push_str(&row.join(" "));
                        sig.push('\n');
                    }
                    ys.push_str(&format!("{id}\n"));
                    subs.push_str(&format!("{}\n", s + 1));
                }
            }
        }
        let dir = base.join(split);
        fs::create_dir_all(dir.join("Inertial Signals")).unwrap();
        fs::write(dir.join(format!("y_{split}.txt")), ys).unwrap();
        fs::write(dir.join(format!("subject_{split}.txt")), subs).unwrap();
        for (k, name) in names.iter().enumerate() {
            fs::write(dir.join("Inertial Signals").join(format!("{name}_{split}.txt")), &signals[k]).unwrap();
        }
    }
}

/// Activity numbers used for each USC-HAD class (walking forward, running,
/// jumping, sitting, standing) plus one excluded activity (sleeping).
pub const USC_ACTIVITIES: [usize; 5] = [1, 6, 7, 8, 9];
pub const USC_EXCLUDED: usize = 10;

/// Little-endian, uncompressed level-5 MAT-file holding char and double
/// matrices, padded to 8-byte boundaries.
pub struct MatWriter {
    bytes: Vec<u8>,
}

impl MatWriter {
    pub fn new() -> Self {
        let mut bytes = b"MATLAB 5.0 MAT-file, Platform: test fixture".to_vec();
        bytes.resize(116, b' ');
        bytes.extend_from_slice(&[0; 8]);
        bytes.extend_from_slice(&[0x00, 0x01]);
        bytes.extend_from_slice(b"IM");
        Self { bytes }
    }

    fn element(buf: &mut Vec<u8>, ty: u32, payload: &[u8]) {
        buf.extend_from_slice(&ty.to_le_bytes());
        buf.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        buf.extend_from_slice(payload);
        while !buf.len().is_multiple_of(8) {
            buf.push(0);
        }
    }

    fn matrix(&mut self, class: u32, name: &str, dims: [usize; 2], data_ty: u32, data: &[u8]) {
        let mut body = Vec::new();
        Self::element(&mut body, 6, &[class.to_le_bytes(), 0u32.to_le_bytes()].concat());
        Self::element(&mut body, 5, &[(dims[0] as i32).to_le_bytes(), (dims[1] as i32).to_le_bytes()].concat());
        Self::element(&mut body, 1, name.as_bytes());
        Self::element(&mut body, data_ty, data);
        Self::element(&mut self.bytes, 14, &body);
    }

    pub fn text(&mut self, name: &str, value: &str) -> &mut Self {
        let data: Vec<u8> = value.encode_utf16().flat_map(u16::to_le_bytes).collect();
        self.matrix(4, name, [1, value.len()], 4, &data);
        self
    }

    /// `rows` in row-major order, stored column-major.
    pub fn doubles(&mut self, name: &str, rows: &[[f64; 6]]) -> &mut Self {
        let mut data = Vec::with_capacity(rows.len() * 48);
        for c in 0..6 {
            for r in rows {
                data.extend_from_slice(&r[c].to_le_bytes());
            }
        }
        self.matrix(6, name, [rows.len(), 6], 9, &data);
        self
    }

    pub fn finish(&self) -> Vec<u8> {
        self.bytes.clone()
    }
}

/// `<root>/Subject<n>/a<act>t1.mat` with `sensor_readings` in g and deg/s.
pub fn write_usc_had(root: &Path, subjects: usize, len: usize) {
    for s in 0..subjects {
        let dir = root.join(format!("Subject{}", s + 1));
        fs::create_dir_all(&dir).unwrap();
        for (c, act) in USC_ACTIVITIES.iter().chain([&USC_EXCLUDED]).enumerate() {
            let rows: Vec<[f64; 6]> = stream(c, s, len, 100.0, 4)
                .into_iter()
                .map(|v| [v[0] / G0, v[1] / G0, v[2] / G0, v[3].to_degrees(), v[4].to_degrees(), v[5].to_degrees()])
                .collect();
            let bytes = MatWriter::new()
                .text("title", "USC Human Motion Database")
                .text("activity", &format!("activity {act}"))
                .doubles("sensor_readings", &rows)
                .finish();
            fs::write(dir.join(format!("a{act}t1.mat")), bytes).unwrap();
        }
    }
}

/// Writes every dataset under `root/<kind>` with enough data for a
/// subject-wise split and a few windows per class at `window` samples.
pub fn write_all(root: &Path, subjects: usize, window: usize) {
    write_ridi(&root.join("ridi"), subjects, 4 * window);
    write_motionsense(&root.join("motionsense"), subjects, 4 * window);
    write_uci_har(&root.join("uci_har"), subjects, (4 * window) / 64 + 1);
    write_usc_had(&root.join("usc_had"), subjects, 4 * window);
}
