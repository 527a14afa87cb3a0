//! scratch probe for root-MUSIC numerics (not shipped)

use enff_core::datastore::Recording;
use enff_core::enf::root_music_frequency;
use enff_core::filters::{apply, design_butterworth_bandpass};
use enff_core::spectral::{band_snr_db, welch_psd};
use enff_core::synth::{render_audio, render_power, synth_frequency_walk, Background, GridProfile};

fn selected_radius(frame: &[f64], fs: f64, band: (f64, f64)) -> Option<(f64, f64)> {
    enff_core::enf::root_music_root(frame, fs, 20, 2, band).ok()
}

fn main() {
    let fs = 1000.0;
    let profile = GridProfile {
        name: "p".into(),
        nominal_hz: 60,
        deviation_limits_hz: (-0.02, 0.02),
        wander_timescale_s: 20.0,
        stability: 0.4,
        harmonic_levels: vec![],
        seed: 5,
    };
    let walk = synth_frequency_walk(&profile, 300.0, 1.0).unwrap();

    // SNR calibration with different welch segment lengths
    for requested in [10.0, 20.0, 30.0] {
        let rec = render_power(&profile, &walk, 1.0, fs, requested).unwrap();
        for seg in [4096usize, 8192, 16384, 32768] {
            let psd = welch_psd(&rec.samples, fs, seg, 0.5).unwrap();
            let snr = band_snr_db(&psd, 60.0, 0.5).unwrap();
            print!("  req {requested} seg {seg}: {snr:.2} dB;");
        }
        println!();
    }

    // no-hum audio: how many frames produce estimates, and what do
    // estimates look like on noise-only filtered frames
    let rec_nohum = render_audio(&profile, &walk, 1.0, fs, -130.0, Background::White).unwrap();
    let filter = design_butterworth_bandpass(2, 59.5, 60.5, fs).unwrap();
    let filtered = apply(&filter, &rec_nohum.samples).unwrap();
    let mut radii = Vec::new();
    for j in 0..19 {
        let frame = &filtered[j * 15000..(j + 1) * 15000];
        if let Some((_, r)) = selected_radius(frame, fs, (59.5, 60.5)) {
            radii.push(r);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("no-hum radii: min {:.6} median {:.6} max {:.6} ({} frames)",
        radii[0], radii[radii.len()/2], radii[radii.len()-1], radii.len());

    // hum at several SNRs for comparison
    for snr in [-10.0, -5.0, 0.0, 10.0] {
        let rec_hum = render_audio(&profile, &walk, 1.0, fs, snr, Background::SpeechShaped).unwrap();
        let filtered = apply(&filter, &rec_hum.samples).unwrap();
        let mut radii = Vec::new();
        let mut errors = Vec::new();
        for j in 0..19 {
            let frame = &filtered[j * 15000..(j + 1) * 15000];
            if let Some((f, r)) = selected_radius(frame, fs, (59.5, 60.5)) {
                radii.push(r);
                let truth: f64 = walk[j*15..(j+1)*15].iter().sum::<f64>() / 15.0;
                errors.push((f - truth).abs());
            }
        }
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!("hum {snr} dB radii: min {:.6} median {:.6}; err median {:.5} max {:.5}",
            radii[0], radii[radii.len()/2], errors[errors.len()/2], errors[errors.len()-1]);
    }

    // power-path radii at 40 dB for reference
    let rec_pow = render_power(&profile, &walk, 1.0, fs, 40.0).unwrap();
    let pfilter = design_butterworth_bandpass(2, 40.0, 70.0, fs).unwrap();
    let pfiltered = apply(&pfilter, &rec_pow.samples).unwrap();
    let mut radii = Vec::new();
    for j in 0..59 {
        let frame = &pfiltered[j * 5000..(j + 1) * 5000];
        if let Some((_, r)) = selected_radius(frame, fs, (40.0, 70.0)) {
            radii.push(r);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("power 40 dB radii: min {:.6} median {:.6}", radii[0], radii[radii.len()/2]);

    // eigenvalue picture: print the top eigenvalue ratios for one noise
    // frame and one hum frame
    let _ = Recording::new("x", vec![0.0; 10], fs); // keep import used
}
