//! scratch probe: end-to-end synthetic corpus accuracy (not shipped)

use enff_core::classifier::{evaluate, pairs_for, train_ovo, PairPreset};
use enff_core::datastore::{GridLabel, SignalKind};
use enff_core::enf::{extract_audio_enf, extract_power_enf};
use enff_core::features::{compute_features, Category, FeatureVector};
use enff_core::spectral::{separate, DEFAULT_SNR_THRESHOLD_DB};
use enff_core::synth::{builtin_profiles, render_audio, render_power, synth_frequency_walk, Background};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let train_n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(6);
    let test_n: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(3);
    let minutes: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(10.0);

    let fs = 1000.0;
    let profiles = builtin_profiles();
    let mut train: Vec<(FeatureVector, GridLabel)> = Vec::new();
    let mut test: Vec<(FeatureVector, GridLabel)> = Vec::new();

    let t0 = std::time::Instant::now();
    for profile in &profiles {
        let label: GridLabel = profile.name.parse().unwrap();
        for k in 0..(train_n + test_n) {
            let mut p = profile.clone();
            p.seed = profile.seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            let walk = synth_frequency_walk(&p, minutes * 60.0, 1.0).unwrap();

            // deterministic per-recording SNRs
            let power_snr = 33.0 + (k % 5) as f64;
            let hum_snr = -2.0 + (k % 5) as f64;

            for kind in [SignalKind::Power, SignalKind::Audio] {
                let rec = match kind {
                    SignalKind::Power => render_power(&p, &walk, 1.0, fs, power_snr).unwrap(),
                    SignalKind::Audio => {
                        render_audio(&p, &walk, 1.0, fs, hum_snr, Background::SpeechShaped).unwrap()
                    }
                };
                let report = separate(&rec, DEFAULT_SNR_THRESHOLD_DB).unwrap();
                if report.decided_kind != kind {
                    println!("!! separation miss: {} {kind:?} k={k} (snr {:.1})", profile.name, report.snr_db);
                    continue;
                }
                let seq = match report.decided_kind {
                    SignalKind::Power => extract_power_enf(&rec).unwrap(),
                    SignalKind::Audio => {
                        extract_audio_enf(&rec, report.dominant_frequency_hz).unwrap()
                    }
                };
                let fv = compute_features(&seq).unwrap();
                if k < train_n {
                    train.push((fv, label));
                } else {
                    test.push((fv, label));
                }
            }
        }
    }
    println!("corpus built in {:.1} s: {} train, {} test", t0.elapsed().as_secs_f64(), train.len(), test.len());

    // per-grid feature means for diagnosis
    for category in Category::ALL {
        println!("--- {category} ---");
        let schedule = category.schedule();
        print!("{:>6}", "grid");
        for name in schedule { print!(" {name:>18}"); }
        println!();
        for grid in GridLabel::GRIDS {
            let rows: Vec<&FeatureVector> = train.iter().filter(|(v, l)| v.category == category && *l == grid).map(|(v, _)| v).collect();
            if rows.is_empty() { continue; }
            print!("{grid:>6}");
            for j in 0..schedule.len() {
                let mean = rows.iter().map(|v| v.values[j]).sum::<f64>() / rows.len() as f64;
                let sd = (rows.iter().map(|v| (v.values[j] - mean).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
                print!(" {mean:>10.4}+-{sd:<6.4}");
            }
            println!();
        }
    }

    // train + evaluate per category
    let mut classifiers = Vec::new();
    for category in Category::ALL {
        let rows: Vec<(FeatureVector, GridLabel)> = train.iter().filter(|(v, _)| v.category == category).cloned().collect();
        if rows.is_empty() { continue; }
        let labels: Vec<GridLabel> = rows.iter().map(|(_, l)| *l).collect();
        let pairs = pairs_for(PairPreset::Full, category, &labels);
        let clf = train_ovo(&rows, category, &pairs, 10.0, None).unwrap();
        classifiers.push(clf);
    }

    for (name, rows) in [("train", &train), ("test", &test)] {
        let report = evaluate(&classifiers, rows).unwrap();
        println!("== {name} ==");
        println!("{report}");
    }
    println!("total {:.1} s", t0.elapsed().as_secs_f64());
}
