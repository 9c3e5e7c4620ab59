use comma::mf_detector::{mf_lists, theorem3_bound, MfConfig};
use comma::mmv_amp::{
    amp_detect, disambiguate, genie_outer_decode, outer_list_decode, top_candidates, AmpConfig, CandidateLists,
};
use comma::ortho_mod::{read_frame_dump, simulate_slots, write_frame_dump, Codebook, SystemParams};
use comma::rng::stream_rng;
use rand::Rng;

#[test]
fn genie_matches_explicit_outer_decoding() {
    // small codebook: the explicit list decoder plus posterior disambiguation
    // succeeds for every user the genie certifies
    let params = SystemParams { k_a: 6, q: 16, n: 8, m: 8, p: 2.0, b: 10, eps: 0.05 };
    let codebook = Codebook::generate(params.b, params.n, params.q, 21).unwrap();
    let table = codebook.materialize().unwrap();
    let n_fa = 1;
    let (mut genie_ok, mut explicit_ok, mut total) = (0, 0, 0);
    for frame_idx in 0..20u64 {
        let mut rng = stream_rng(5, frame_idx);
        let msgs: Vec<usize> = (0..params.k_a).map(|_| rng.random_range(0..table.len())).collect();
        let words: Vec<Vec<usize>> = msgs.iter().map(|&m| table[m].clone()).collect();
        let frame = simulate_slots(&params, &words, None, rng.random(), false).unwrap();
        let mut lists = Vec::new();
        let mut posteriors = vec![Vec::new(); params.k_a];
        for slot in &frame.slots {
            let out = amp_detect(&slot.y, &frame.h, params.p, &AmpConfig::default()).unwrap();
            lists.push(top_candidates(&out.state, n_fa).unwrap());
            for (k, post) in posteriors.iter_mut().enumerate() {
                post.push(out.state.x.row(k).iter().copied().collect::<Vec<f64>>());
            }
        }
        let lists = CandidateLists::from_slots(lists);
        let genie = genie_outer_decode(&lists, &words, params.q, n_fa, params.b, 0.05, 2_000, 1).unwrap();
        for k in 0..params.k_a {
            total += 1;
            let outer: Vec<Vec<usize>> = outer_list_decode(&table, &lists, k).into_iter().map(|m| table[m].clone()).collect();
            assert_eq!(genie.covered[k], outer.contains(&words[k]));
            if let Ok(decoded) = disambiguate(&posteriors[k], &outer) {
                explicit_ok += usize::from(decoded == words[k]);
            }
            genie_ok += usize::from(genie.covered[k]);
        }
    }
    // the explicit decoder can only lose users the genie counts as covered
    assert!(explicit_ok <= genie_ok);
    assert!(explicit_ok as f64 >= 0.9 * genie_ok as f64, "{explicit_ok} of {genie_ok} (of {total})");
}

#[test]
fn matched_filter_error_is_below_its_bound() {
    let (k_a, q, m, p, n, eps) = (3, 32, 64, 1.0, 5, 0.0);
    let bound = theorem3_bound(k_a, q, m, p, n, eps).unwrap();
    assert!(bound < 1.0);
    let params = SystemParams { k_a, q, n, m, p, b: 8, eps: 0.05 };
    let cfg = MfConfig::default();
    let (mut missed, mut users) = (0, 0);
    for f in 0..300u64 {
        let mut rng = stream_rng(8, f);
        let words: Vec<Vec<usize>> = (0..k_a).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect();
        let frame = simulate_slots(&params, &words, None, rng.random(), false).unwrap();
        let mut hit = vec![true; k_a];
        for slot in &frame.slots {
            let lists = mf_lists(&slot.y, &frame.h, p, &cfg).unwrap();
            for k in 0..k_a {
                hit[k] &= lists[k].iter().any(|c| c.symbol == slot.symbols[k]);
            }
        }
        missed += hit.iter().filter(|h| !**h).count();
        users += k_a;
    }
    assert!((missed as f64 / users as f64) <= bound, "{missed}/{users} vs {bound}");
}

#[test]
fn frame_dump_survives_a_file() {
    let params = SystemParams { k_a: 2, q: 8, n: 3, m: 2, p: 1.0, b: 4, eps: 0.05 };
    let frame = simulate_slots(&params, &[vec![0, 1, 2], vec![3, 4, 5]], None, 1, false).unwrap();
    let ys: Vec<_> = frame.slots.iter().map(|s| s.y.clone()).collect();
    let path = std::env::temp_dir().join(format!("comma-dump-{}.coma", std::process::id()));
    write_frame_dump(std::fs::File::create(&path).unwrap(), &ys).unwrap();
    let back = read_frame_dump(std::fs::File::open(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in ys.iter().zip(&back) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.re as f32, y.re);
            assert_eq!(x.im as f32, y.im);
        }
    }
}
