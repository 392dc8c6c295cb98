use acorsis::penalize::{kappa_ebic, lambda_path_gic, Method};
use acorsis::screening::{screen_scores, shrunk_variable_set, ScreenSize};
use acorsis::simulate::{gen_design, gen_response, Case};
use acorsis::{standardize, EffectIndex, Family};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn screen_and_fit(y: &[f64], x: &[f64], p: usize, method: Method) -> acorsis::penalize::CoefficientSet {
    let ds = standardize(y, x, p, Family::Gaussian).unwrap();
    let n = ds.n();
    let scores = screen_scores(&ds, 1).unwrap();
    let set = shrunk_variable_set(&scores, n, ScreenSize::conventional(n)).unwrap();
    lambda_path_gic(&ds, &set.indices, method, kappa_ebic(p, n)).unwrap().model
}

#[test]
fn noise_only_data_selects_intercept_only() {
    // the EBIC weight ln p · ln ln n outgrows the largest null chi-square only
    // slowly in n; at n = 200 a lone extreme noise main gets in about 9% of the time
    let (n, p, runs) = (400, 2000, 100);
    let mut empty = 0;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let x: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let model = screen_and_fit(&y, &x, p, Method::Gresh);
        if model.df() == 1 {
            empty += 1;
        }
    }
    println!("intercept-only in {empty}/{runs} noise runs");
    assert!(empty as f64 >= 0.95 * runs as f64, "{empty}/{runs}");
}

#[test]
fn case_b_interactions_are_recovered() {
    let (n, p, runs) = (200, 200, 20);
    let want = [EffectIndex::pair(1, 4), EffectIndex::pair(1, 5), EffectIndex::pair(5, 6)];
    let mut hits = 0;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let x = gen_design(n, p, 0.0, &mut rng).unwrap();
        let (y, _) = gen_response(Case::B, &x, n, p, &mut rng).unwrap();
        let model = screen_and_fit(&y, &x, p, Method::Gresh);
        let got = model.selected_interactions();
        if want.iter().all(|e| got.contains(e)) {
            hits += 1;
        }
    }
    println!("all three case (b) interactions in {hits}/{runs} runs");
    assert!(hits as f64 >= 0.8 * runs as f64, "{hits}/{runs}");
}
