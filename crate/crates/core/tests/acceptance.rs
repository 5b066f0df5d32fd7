//! Acceptance suite: every mandatory criterion runs here and prints one
//! pass/fail line. The full-scale criteria (real corpora, long training)
//! are `#[ignore]`d stubs documenting what a hardware run must check.

use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toxgen_core::analysis::paired_t_test;
use toxgen_core::attributes::{
    flip_attribute, thresholded_tokens, AttributeConfig, Rendering, ToxLabel,
    ToxicityProbabilities,
};
use toxgen_core::corpus::{
    DatasetSchema, InDatasetAttributes, Post, PostRecord, ReferenceSet, SbicFlags,
    ToxicityRecord,
};
use toxgen_core::embed::{cosine, HashedNgramEncoder, SentenceEncoder};
use toxgen_core::evaluation::{max_bleu, rouge_l_f1_single, sentence_bleu};
use toxgen_core::experiment::report::{
    write_metrics_table, write_score_distribution, write_significance_table,
    write_uniqueness_histogram,
};
use toxgen_core::experiment::{
    run_experiment, AttributeSource, ExperimentConfig, ExperimentData,
};
use toxgen_core::generator::{
    coda_attention, generate, train_generator, DecodeParams, GenConfig, GenExample, Infusion,
};
use toxgen_core::kg::lemma;
use toxgen_core::kg::{
    embed_tuples, retrieve_conceptnet_style, retrieve_stereokg_style, select_k, KgIndex,
    KnowledgeTuple, RetrievalSelection, ScoredTuple, SelectionMode,
};
use toxgen_core::regressor::{constant_mean_rmse, stratified_split, train_regressor, RegressorConfig};
use toxgen_core::RegressorF64;

type Check = std::result::Result<(), String>;

fn fail(msg: impl Into<String>) -> Check {
    Err(msg.into())
}

// ---------------------------------------------------------------------------
// Criterion 1: Gamma thresholding vs elementwise oracle + properties.
// ---------------------------------------------------------------------------
fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let lambdas = [0.3, 0.5, 0.6];
    for case in 0..10_000 {
        let p = ToxicityProbabilities::new(std::array::from_fn(|_| rng.gen_range(0.0..=1.0)));
        let mut tokens_by_lambda = Vec::new();
        for &lambda in &lambdas {
            let cfg = AttributeConfig {
                lambda,
                rendering: Rendering::SpecialTokens,
            };
            let rendered = thresholded_tokens(&p, &cfg);
            let parts: Vec<&str> = rendered.text.split_whitespace().collect();
            if parts.len() != 6 {
                return fail(format!("case {case}: expected 6 tokens, got {}", parts.len()));
            }
            // Elementwise oracle: strictly-below-lambda renders negative.
            for (i, label) in ToxLabel::ALL.iter().enumerate() {
                let expected = if p.0[i] < lambda {
                    label.negative_token()
                } else {
                    label.positive_token()
                };
                if parts[i] != expected {
                    return fail(format!(
                        "case {case}, lambda {lambda}, label {i}: got {} want {expected}",
                        parts[i]
                    ));
                }
            }
            tokens_by_lambda.push(parts.iter().map(|s| s.to_string()).collect::<Vec<_>>());

            // Flip-involution on every label.
            for label in ToxLabel::ALL {
                let once = flip_attribute(&rendered, label).map_err(|e| e.to_string())?;
                let twice = flip_attribute(&once, label).map_err(|e| e.to_string())?;
                if twice.text != rendered.text {
                    return fail(format!("case {case}: flip is not an involution for {label:?}"));
                }
            }
        }
        // Monotonicity: a token positive under a larger lambda must also be
        // positive under any smaller lambda.
        for w in tokens_by_lambda.windows(2) {
            for i in 0..6 {
                let pos_small = !w[0][i].starts_with("<NOT_");
                let pos_large = !w[1][i].starts_with("<NOT_");
                if pos_large && !pos_small {
                    return fail(format!("case {case}: monotonicity violated at label {i}"));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 2: KG retrieval vs brute force + selection properties.
// ---------------------------------------------------------------------------
fn synthetic_kg(rng: &mut ChaCha8Rng) -> (Vec<KnowledgeTuple>, Vec<String>) {
    let pool = [
        "woman", "driver", "criminal", "immigrant", "worker", "stereotype", "neighborhood",
        "computer", "teacher", "student", "doctor", "voter", "citizen", "money", "country",
        "language", "culture", "religion", "family", "violence", "poverty", "crime", "job",
        "school", "city",
    ];
    let relations = ["related to", "capable of", "desires", "part of"];
    let mut tuples = Vec::new();
    for id in 0..100 {
        let head = pool[rng.gen_range(0..pool.len())];
        let tail = pool[rng.gen_range(0..pool.len())];
        let rel = relations[rng.gen_range(0..relations.len())];
        let weight = (rng.gen_range(1..=60) as f64) / 10.0;
        tuples.push(KnowledgeTuple::new(id, head, rel, tail, weight).unwrap());
    }
    let fillers = ["the", "a", "is", "my", "so", "very"];
    let mut posts = Vec::new();
    for _ in 0..20 {
        let n = rng.gen_range(5..9);
        let words: Vec<&str> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    pool[rng.gen_range(0..pool.len())]
                } else {
                    fillers[rng.gen_range(0..fillers.len())]
                }
            })
            .collect();
        posts.push(words.join(" "));
    }
    (tuples, posts)
}

fn tuple_lemmas(t: &KnowledgeTuple) -> BTreeSet<String> {
    lemma::tokenize(&t.head)
        .iter()
        .chain(lemma::tokenize(&t.tail).iter())
        .map(|w| lemma::lemmatize(w))
        .collect()
}

fn sorted_desc(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    v
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (tuples, posts) = synthetic_kg(&mut rng);
    let index = KgIndex::build(tuples.clone());
    let idf = toxgen_core::kg::compute_idf(&posts).map_err(|e| e.to_string())?;
    let encoder = HashedNgramEncoder::default();
    let embedded = embed_tuples(&tuples, &encoder);

    for (pi, post) in posts.iter().enumerate() {
        // Brute-force idf x relation-weight scoring with dedup-max.
        let query = toxgen_core::kg::extract_query_tokens(post);
        let mut brute: Vec<(usize, f64)> = Vec::new();
        for t in &tuples {
            let lemmas = tuple_lemmas(t);
            let best = query
                .iter()
                .filter(|q| lemmas.contains(*q))
                .map(|q| idf.idf(q) * t.relation_weight)
                .fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                brute.push((t.id, best));
            }
        }
        let brute = sorted_desc(brute);
        let got = retrieve_conceptnet_style(post, &index, &idf);
        let got_pairs: Vec<(usize, f64)> = got.iter().map(|s| (s.tuple.id, s.score)).collect();
        if got_pairs != brute {
            return fail(format!("post {pi}: idf-relevance ranking mismatch"));
        }

        // Brute-force cosine ranking.
        let q = encoder.embed(post);
        let brute_cos = sorted_desc(
            tuples
                .iter()
                .map(|t| (t.id, cosine(&q, &encoder.embed(&t.linearized))))
                .collect(),
        );
        let got_cos = retrieve_stereokg_style(post, &embedded, &encoder).map_err(|e| e.to_string())?;
        let got_cos_pairs: Vec<(usize, f64)> = got_cos.iter().map(|s| (s.tuple.id, s.score)).collect();
        if got_cos_pairs != brute_cos {
            return fail(format!("post {pi}: cosine ranking mismatch"));
        }

        // Top/bottom disjointness whenever there are enough candidates.
        let k = 5;
        if got.len() >= 2 * k {
            let top = select_k(&got, &RetrievalSelection::new(SelectionMode::Top, k, None).unwrap())
                .map_err(|e| e.to_string())?;
            let bottom =
                select_k(&got, &RetrievalSelection::new(SelectionMode::Bottom, k, None).unwrap())
                    .map_err(|e| e.to_string())?;
            let top_ids: BTreeSet<usize> = top.tuples.iter().map(|t| t.id).collect();
            if bottom.tuples.iter().any(|t| top_ids.contains(&t.id)) {
                return fail(format!("post {pi}: top-k and bottom-k overlap"));
            }
        }

        // Seeded-random determinism.
        let sel = RetrievalSelection::new(SelectionMode::Random, 5, Some(17)).unwrap();
        let r1 = select_k(&got_cos, &sel).map_err(|e| e.to_string())?;
        let r2 = select_k(&got_cos, &sel).map_err(|e| e.to_string())?;
        if r1.tuples.iter().map(|t| t.id).collect::<Vec<_>>()
            != r2.tuples.iter().map(|t| t.id).collect::<Vec<_>>()
        {
            return fail(format!("post {pi}: random-k is not seed-deterministic"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 3: metric oracles.
// ---------------------------------------------------------------------------
fn brute_force_lcs(a: &[&str], b: &[&str]) -> usize {
    // Enumerate every subsequence of the shorter side.
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0usize;
    for mask in 0u32..(1 << short.len()) {
        let sub: Vec<&str> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| short[*&i])
            .collect();
        if sub.len() <= best {
            continue;
        }
        let mut it = long.iter();
        if sub.iter().all(|w| it.any(|l| l == w)) {
            best = sub.len();
        }
    }
    best
}

fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let vocab = ["a", "b", "c", "d", "people", "are", "bad", "the", "stereotype", "is"];
    let n = rng.gen_range(1..=max_len);
    (0..n)
        .map(|_| vocab[rng.gen_range(0..vocab.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);

    // Identity BLEU is exactly 100.
    for i in 0..200 {
        let s = random_sentence(&mut rng, 12);
        let b = sentence_bleu(&s, &s);
        if b != 100.0 {
            return fail(format!("identity BLEU case {i}: {b} != 100"));
        }
    }

    // ROUGE-L against exhaustive LCS on a 50-pair fixture of short strings.
    for i in 0..50 {
        let h = random_sentence(&mut rng, 10);
        let r = random_sentence(&mut rng, 10);
        let ht: Vec<&str> = h.split_whitespace().collect();
        let rt: Vec<&str> = r.split_whitespace().collect();
        let lcs = brute_force_lcs(&ht, &rt) as f64;
        let expected = if lcs == 0.0 {
            0.0
        } else {
            let p = lcs / ht.len() as f64;
            let rec = lcs / rt.len() as f64;
            2.0 * p * rec / (p + rec)
        };
        let got = rouge_l_f1_single(&h, &r);
        if (got - expected).abs() > 1e-12 {
            return fail(format!("ROUGE pair {i}: {got} vs brute {expected}"));
        }
    }

    // max-over-references: adding the hypothesis as a reference forces 100.
    for i in 0..1000 {
        let h = random_sentence(&mut rng, 12);
        let n_refs = rng.gen_range(0..4);
        let mut refs: Vec<String> = (0..n_refs).map(|_| random_sentence(&mut rng, 12)).collect();
        refs.push(h.clone());
        let m = max_bleu(&h, &refs);
        if m != Some(100.0) {
            return fail(format!("max-BLEU fuzz case {i}: {m:?} != Some(100)"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 4: paired t-test vs a frozen reference implementation.
// The 20 fixtures below were computed with an independent statistics
// package (two-sided paired t-test; effect size = mean(d)/std(d, ddof=1)).
// ---------------------------------------------------------------------------
#[allow(clippy::type_complexity)]
fn t_test_fixtures() -> Vec<(Vec<f64>, Vec<f64>, f64, f64, f64)> {
    let raw: [(&[f64], &[f64], f64, f64, f64); 20] = [
    (&[2.439856202120, -1.431702561403, -2.209592963181, 2.141569062266, 1.963144766687, 2.891096600975, -1.174940165926, 0.676048926363, -0.240636730814, -2.164935842533, 0.289084050847, 2.215116130187, 1.868011384505, 2.195490707405, 2.767293734402, 4.075345321550, -0.802066475956, 2.982668613577, 1.085989627653, 2.912640085584, 0.502788215774, 1.255271363933, 1.802925327160, -0.124668408032, -0.472314281740, 2.683038324181], &[2.197415174025, -1.537895985236, -2.301586921828, 1.740942532147, 2.472952867888, 3.055913988199, -0.808297679445, 0.313593549602, -0.886273807384, -1.951539462918, 0.455896397320, 2.209619268174, 2.120770320950, 2.187742218936, 3.040791169355, 4.975723541873, -1.836814316239, 2.687352013675, 0.943369070261, 2.782418097625, 0.275111285448, 0.803055472552, 1.283694672448, -0.870013019170, -0.721553422684, 2.992499585091], 1.166082201393, 0.254585564567, 0.228687534591),
    (&[-0.050648856923, 0.372513311411, -2.537294063739, -2.007376757562, 0.137142769365, -3.734015586657], &[-2.402655875996, 0.417643255063, -3.692162447947, -2.442872755121, -0.117819461386, -4.419332515358], 2.298349810726, 0.069916363157, 0.938297381117),
    (&[-1.303164367202, -2.352852937946, -2.221144461548, 0.311184518159, 0.350693534018], &[-5.647482808002, -3.672916209158, -2.830043197169, -0.307791868177, -0.042229892884], 1.972828290819, 0.119780893512, 0.882275633241),
    (&[2.365325961914, 1.718040156499, 2.853380245613, 4.762924922956, 0.979752455777], &[5.514856914178, 3.123971712483, 2.643913054685, 3.678566193830, 0.265788427325], -0.649009126431, 0.551713423070, -0.290245704943),
    (&[-0.854378351085, 0.528307160862, 1.933226080137, -3.984649344975, 0.559876499698, 3.460122615217, 1.994440541765, 3.400919105441, 4.240964800532, -0.462802648478, 1.416096067008, 0.799064384034, 1.905413520153, -0.562922028289, 5.468148360638, 3.758105490822, 4.203334507748, 1.937801135559, 3.062544717974, 0.293535340095, 5.113059298610], &[-3.791536795184, 0.714761470367, 0.312338613347, -5.375351750807, -3.125805857933, 2.956919524769, 0.811020298838, 2.676513758610, 2.959751532482, -0.664419847817, -1.246313567650, 1.905388021439, -0.027352072153, 0.110002902847, 3.659375571384, 2.441243083193, 2.197277673661, 1.764399648785, 3.155305815085, 0.797250269388, 1.322154011276], 3.908143637668, 0.000872019419, 0.852826859351),
    (&[-5.155094186665, -2.100343670933, -0.061718862739, -4.112520694468, -4.210815558983, 0.569445407468, -3.037865865127, -1.301757636603, 3.078298740624, 0.896887250980, -2.023087617163, 1.220975178248, 2.219424090721, -1.520587515137, -1.159697365100, -2.659367089874], &[-5.097571923471, -2.320706755673, 1.880861818413, -3.330640019310, -2.958256988958, 0.370114376986, -1.589033479061, -2.092661344005, 3.215334352772, 2.391159230325, -1.631790937587, 2.298691514215, 2.313877467604, -3.156183394023, 0.224641680371, -3.021882379406], -1.765260379699, 0.097863211662, -0.441315094925),
    (&[-0.692954793979, -3.100063147503, -2.678253712663, 3.166852573832, -0.451761966199, -2.166585634693, 5.110594267692, -2.102483522127, 1.024071845034, 0.122751678386, 2.325509211170, -1.229830735137, 4.693987947976, 1.682785243317, -0.805435928892, 1.308630979073, 1.045701062100, -1.193986882909, -0.659027744938], &[-0.856928460607, -3.292665189987, -2.557084768725, 2.386006713780, -1.200129669037, -2.640194150175, 4.579753280849, -1.800481976210, 1.383792676053, 0.352464271053, 1.838295159587, -1.856623933005, 4.183952417947, 1.855174225698, -1.448171646028, 1.156315758989, 1.296852961518, -1.654113631445, -1.880988755714], 2.878715029932, 0.009994081425, 0.660422521196),
    (&[2.060132822868, 0.486222488233, 0.651568533719, 3.059511350004, 0.555918925917, 0.998659727069, -0.867901041448, 5.156332316984, 1.249612710142, 2.659521111925, 0.151058071710, 1.609902230325, -0.408403162597, 3.195577600499, 3.113594817301], &[-0.751263314347, -2.459141985955, -3.982259336001, 3.070210058535, -4.246710030307, 1.992204445249, -0.226786855682, 2.559570670435, -1.642281062409, 2.340310144194, -0.647351885569, -2.670298341420, -3.424054233490, -1.161534027290, 4.145758387415], 3.755210279667, 0.002131317502, 0.969591124977),
    (&[-1.970815387163, -1.016881072294, -1.143719838925, -2.185097669014, -5.364748644364, -4.593858982473, -3.023689713692, -1.556260213882, -0.197427297044, -3.815106765849, -2.253246124619, -1.134927238211, 0.548695111965, -1.541399857304, -6.036843834617, -2.467875538764, -1.231343967202, -2.583479236032, -2.467214939901, -0.129786315726, -4.563803548524, -2.353797621533, -2.299713922924, -2.409087532311, -4.343619591685, -0.178846071400], &[-3.546928809510, -2.408418150602, -5.268848133673, -2.573634386750, -6.765531500914, -3.048361075108, -3.686423047603, -3.657545323308, -2.467805012159, -3.774542624870, -3.522792035504, -0.698155722533, -3.192446923427, -1.929020149268, -6.840964535930, -4.577051988462, -2.003235277471, -5.368087245320, -3.550222481916, -2.539144598539, -4.476153173335, -3.935136304867, -3.444768131878, -2.234388643568, -7.983836880149, 1.226615548862], 4.339631720903, 0.000206320598, 0.851071801027),
    (&[3.285837735310, 4.327470381370, 0.910357849455, 1.955757050129, 1.079659286685, 3.906389637400, 4.490881677626, 6.348974768748, 6.266142558876, 2.886083295047, 3.278636729832, 4.923453147819, 4.253995728794, 3.338483923576, 6.384326099196, 5.451239754674, 5.793925616289], &[1.542502256814, 2.166773383474, -1.492033114009, 2.297730786474, 2.012499349152, 3.873936975844, 2.478954091852, 8.740554418510, 6.959777628297, 3.723309805819, 5.703623739813, 4.156230919489, 2.627519104083, 4.121245936638, 6.698761980215, 5.225983728732, 4.180228920688], 0.616108891791, 0.546488712044, 0.149428355161),
    (&[1.994158133648, 3.062761985977, 4.847177954944, 1.013178398193, -0.695496909172, 4.637453766581, -0.157185694303, 3.930709695679, -0.253482853674, -0.627150968397, 1.774209935520, 5.143351738730, 1.865086762440, 1.282377966652], &[1.351309164976, 2.273960534503, 4.099722836549, -0.287186620839, -1.406199805405, 2.907388604675, -1.410807557021, 2.035251923067, -1.236417624406, -1.705074241742, 0.447721815885, 4.193530772919, 0.725842945682, 0.643597681013], 10.414040236661, 0.000000112148, 2.783269326976),
    (&[0.656965314002, -1.941075499701, 0.195001988115, -0.526585594481, -1.432253661924, -2.129988413393, 4.443841535878, 3.794195230132, 3.783573983949, 0.574729068279, 2.936441723026, -1.979820317647, 1.759713707854, 2.335100060326, 0.244187699170, -2.847322813816, 2.067399576193], &[1.789767191683, -0.695047094031, 1.860914229293, 0.715575469876, -0.389233285280, -1.549600661761, 5.355265623624, 5.973705831933, 5.869548581625, 2.369408905798, 3.453768299724, 0.255192552274, 3.649731541346, 2.719044406952, 2.117757805130, -2.578953053414, 2.148203060951], -7.230913338462, 0.000002005619, -1.753754086128),
    (&[-1.785093201919, -3.131557503216, -2.482157798839, -2.646046216753, -5.368490398033, -1.554448063983, -0.234651327948, -4.253498884712, -3.653256101069, -1.135225766910, -1.364546970836, -2.549438140197, -0.735593175101, -3.829473491574, -3.023058887691, -6.391796759296, -3.449211835223, -5.200330854108, -1.838647224658], &[-1.459953200407, -4.328760035711, -3.534639502383, -1.331870969763, -4.609495052507, -0.142595003093, -1.020120657742, -3.391150407128, -3.773388773416, -2.227145527196, -1.642688803703, -3.307397167702, -1.744981283544, -4.728850182958, -2.201872311556, -5.266066062874, -2.461853444742, -4.658186938596, -2.360433081947], -0.107690708104, 0.915432335650, -0.024705942831),
    (&[-0.614431265821, -1.194420089158, 2.058928223403, -1.274953742543, 0.205454842624, 0.510699916932, -2.000894629450, 1.545091305161, -0.153402151733, -1.629950562331, -1.090470230353, 1.337883316464, -2.476924006538, 1.548836938391, -0.294018788491, -4.188515624215], &[0.798522059242, -0.898426492917, 4.303832063895, 0.740500238967, 2.186422707877, 0.769333250416, 0.218772999521, 2.691938239487, -0.354297809430, 0.647089629723, -0.694461370973, 1.582262551264, -2.052360802978, 2.311745398410, 0.881372773957, -2.782356284871], -5.372624851446, 0.000077597020, -1.343156212861),
    (&[-2.251607084024, 0.666526623810, -0.854769304564, -0.861235569094, 1.556883049864, 2.311874959500, 0.851998855872, 1.569235272407, 0.486122431760, 0.257239534226, 1.039395888559, 1.001973524155, -1.252726459380, 0.284667138938, -2.451894079322, -0.032177068903], &[-1.021709126598, 1.506667468119, -0.587417490322, 1.231164341995, 1.863758028987, 2.044611478142, 1.230054168940, 1.077737694455, 1.965927980199, 0.426612562133, 1.271701785103, 3.766778935901, -2.649223753503, 1.243716045440, -2.761872759292, -2.537997836684], -1.128877572681, 0.276680917869, -0.282219393170),
    (&[-1.216592639722, -3.978451860938, -1.324515453055, 0.058574712145, 2.954022223152, -3.634710354313, -1.998782190180, 0.265732355312, -4.315111549817, -0.941313821266, -5.308299248920, -1.878233589641], &[-3.426023643037, -4.675657272572, -5.685805199466, -2.260207863673, 4.003157703022, -3.850114640260, -2.458557231286, -2.018932095817, -7.228937284003, -0.377656000137, -7.504331475537, -1.755677095100], 2.837175074676, 0.016163348897, 0.819021896551),
    (&[-0.191569692952, -1.469361168458, -0.807167147282, -1.891763460135, -2.817414880008, 0.195106940465, 2.625139762220, -3.428301110759, -4.730120360644, -0.390057568663, 1.438239682305, -0.386492984195, -1.050935647549], &[-5.633766601605, 0.265551338701, 0.288889777451, 0.242322461797, -2.278130982335, -0.251601863310, 3.182328754610, -1.960023458294, -3.549798066589, -0.109672392988, 3.506991814975, -0.174774878878, -0.650855918426], -0.830685732809, 0.422371299247, -0.230390769495),
    (&[3.896562248414, 5.525344196211, 1.804346177670, 4.784096406933, 5.479120634224, 3.430100246619, 7.895419373697, 5.708371706631, 4.182450573180, 0.162995395495, 5.620480800836, 3.713853769548, 7.822556032638, 0.684174086849, 5.689536612255, 5.490412765926, 3.669748527396, 3.698330236377, 4.464994747914], &[4.763652994032, 7.255629087728, 2.149844441634, 5.433276486088, 6.641743936210, 3.913178910567, 8.960209605827, 7.456004510616, 5.410702084076, 0.655569872687, 6.405812403400, 4.402763051905, 9.021661717303, 2.186749231457, 6.890543528600, 7.005833148967, 5.126957608557, 5.427411634697, 5.503036690424], -10.768439259004, 0.000000002825, -2.470449395245),
    (&[-0.275231184950, 1.520102945236, -2.236785200072, 2.604898393255, 2.933436743610, 1.943080395570, -2.949297669157, -3.126920357245, -4.423893434920, -1.942571609708, -0.904936895866, -2.340884194167, 0.152879936861, 2.833469614649, 1.860800402361, -0.098184196203, 0.668317829052, 2.206355819160, -1.508050753785, 1.727260657643, -0.871269767125, -1.365746433900], &[0.982734639149, 2.274510621308, -1.318779655571, 3.358042560646, 3.982273759654, 2.727719508671, -1.757534869892, -2.355938989597, -3.489009223194, -0.868912227060, -0.219457302254, -1.855654590218, 0.869383184356, 3.740799390055, 2.943165418968, 0.688015300026, 1.871839301936, 2.885074509255, -0.552303906596, 2.619643542511, 0.283502258019, -0.648436549747], -20.570438078464, 0.000000000000, -4.385632134077),
    (&[-3.413963179313, 0.938271950953, -2.967600764735, -2.597967053559, 0.378163035506, 1.864458969160, 3.395858276534, 3.056139110327, 1.428419265464, 1.538202832889, 1.328240372673, 0.454161289789, -1.312918262546, -1.775784103869, 1.508908520164, -1.277121576078, 2.276305823653, -0.781369882288, 1.302208581789], &[-4.539865169279, 1.405287453519, -2.526135302726, -1.012250329942, 2.887697792063, -0.174566223464, 3.512919826301, 2.267655427773, 1.939820225495, 2.985009759446, 0.403731404473, 1.827127810879, 1.096053244244, 1.470768765874, 2.789737321118, -0.706946850615, 1.909900428464, 1.147737744324, 1.447340610853], -2.136000253908, 0.046668904226, -0.490032065798),
    ];
    raw.iter()
        .map(|(a, b, t, p, d)| (a.to_vec(), b.to_vec(), *t, *p, *d))
        .collect()
}

fn criterion_4() -> Check {
    for (i, (a, b, t_ref, p_ref, d_ref)) in t_test_fixtures().into_iter().enumerate() {
        let r = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
        if (r.t - t_ref).abs() > 1e-6 {
            return fail(format!("fixture {i}: t {} vs reference {t_ref}", r.t));
        }
        if (r.p - p_ref).abs() > 1e-6 {
            return fail(format!("fixture {i}: p {} vs reference {p_ref}", r.p));
        }
        if (r.effect_size - d_ref).abs() > 1e-6 {
            return fail(format!("fixture {i}: d {} vs reference {d_ref}", r.effect_size));
        }

        // Antisymmetry.
        let rev = paired_t_test(&b, &a).map_err(|e| e.to_string())?;
        if (r.t + rev.t).abs() > 1e-9 || (r.effect_size + rev.effect_size).abs() > 1e-9 {
            return fail(format!("fixture {i}: swapping samples does not negate t/d"));
        }
        if (r.p - rev.p).abs() > 1e-9 {
            return fail(format!("fixture {i}: swapping samples changes p"));
        }

        // Shift invariance: a common offset leaves the paired test unchanged.
        let shift = 3.75;
        let a2: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + shift).collect();
        let r2 = paired_t_test(&a2, &b2).map_err(|e| e.to_string())?;
        if (r.t - r2.t).abs() > 1e-6 || (r.p - r2.p).abs() > 1e-6 {
            return fail(format!("fixture {i}: paired test is not shift invariant"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 5: CoDA numerics and fusion gradients.
// ---------------------------------------------------------------------------
fn fusion_examples(infusion: Infusion) -> Vec<GenExample> {
    let posts = [
        ("f1", "women cannot drive cars"),
        ("f2", "those folks steal jobs"),
    ];
    posts
        .iter()
        .map(|(id, text)| GenExample {
            post_id: id.to_string(),
            input_text: text.to_string(),
            probabilities: (infusion == Infusion::C3).then_some([0.9, 0.1, 0.3, 0.2, 0.8, 0.4]),
            attr_tokens: matches!(infusion, Infusion::C4 | Infusion::C5)
                .then(|| "<TOXIC> <NOT_SEVERE_TOXIC> <NOT_OBSCENE> <NOT_THREAT> <INSULT> <NOT_IDENTITY_ATTACK>".to_string()),
            target: "a stereotype statement".to_string(),
        })
        .collect()
}

fn criterion_5() -> Check {
    // 1x1 hand case: Q = K = V = [2], d = 1, phi = 0, so
    // psi = tanh(4) * sigmoid(0) * 2 = tanh(4) ~ 0.99933.
    let m = Array2::from_elem((1, 1), 2.0f64);
    let psi = coda_attention(&m, &m, &m, 1.0).map_err(|e| e.to_string())?;
    if (psi[[0, 0]] - 4.0f64.tanh()).abs() > 1e-4 {
        return fail(format!("1x1 CoDA case: {} vs tanh(4)", psi[[0, 0]]));
    }

    // |psi_ij| <= sum_k |V_kj| on 1k random shapes.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for case in 0..1000 {
        let n = rng.gen_range(1..5);
        let mm = rng.gen_range(1..5);
        let d = rng.gen_range(1..6);
        let q = Array2::from_shape_fn((n, d), |_| rng.gen_range(-3.0f64..3.0));
        let k = Array2::from_shape_fn((mm, d), |_| rng.gen_range(-3.0f64..3.0));
        let v = Array2::from_shape_fn((mm, d), |_| rng.gen_range(-3.0f64..3.0));
        let psi = coda_attention(&q, &k, &v, 1.0).map_err(|e| e.to_string())?;
        for j in 0..d {
            let bound: f64 = (0..mm).map(|r| v[[r, j]].abs()).sum();
            for i in 0..n {
                if psi[[i, j]].abs() > bound + 1e-9 {
                    return fail(format!("case {case}: psi bound violated"));
                }
            }
        }
    }

    // Finite-difference gradient check for each fusion mode on a 2-sample batch.
    for infusion in [Infusion::C3, Infusion::C4, Infusion::C5] {
        let examples = fusion_examples(infusion);
        let cfg = GenConfig {
            d_model: 6,
            ffn_dim: 12,
            max_len: 24,
            max_vocab: 64,
            epochs: 1,
            batch_size: 2,
            learning_rate: 0.01,
            seed: 9,
            coda_alpha: 1.0,
        };
        let model = train_generator::<f64>(&examples, infusion, &cfg).map_err(|e| e.to_string())?;
        let (_, grads) = model.batch_gradients(&examples).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let names: Vec<String> = model.params.names().to_vec();
        let mut checked = 0usize;
        for name in &names {
            if checked >= 8 {
                break;
            }
            let g = &grads[name];
            let (rows, cols) = (g.nrows(), g.ncols());
            let (i, j) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
            let analytic = g[[i, j]];
            let eps = 1e-5;
            let mut plus = model.clone();
            plus.params.get_mut(name).map_err(|e| e.to_string())?[[i, j]] += eps;
            let mut minus = model.clone();
            minus.params.get_mut(name).map_err(|e| e.to_string())?[[i, j]] -= eps;
            let fd = (plus.batch_loss(&examples).map_err(|e| e.to_string())?
                - minus.batch_loss(&examples).map_err(|e| e.to_string())?)
                / (2.0 * eps);
            let denom = analytic.abs().max(fd.abs());
            if denom < 1e-8 {
                continue; // both effectively zero; nothing to compare
            }
            let rel = (analytic - fd).abs() / denom;
            if rel > 1e-3 {
                return fail(format!(
                    "{infusion:?} gradient check at {name}[{i},{j}]: rel err {rel:.2e}"
                ));
            }
            checked += 1;
        }
        if checked < 4 {
            return fail(format!("{infusion:?}: too few nonzero gradient coordinates checked"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 6: overfit smoke on a 50-sample subset.
// ---------------------------------------------------------------------------
fn overfit_examples(infusion: Infusion) -> Vec<GenExample> {
    let groups = [
        "women", "immigrants", "elders", "teachers", "drivers",
        "workers", "students", "voters", "doctors", "parents",
    ];
    let claims = [
        "are weak", "steal jobs", "cannot vote", "are boring", "crash cars",
        "are lazy", "cheat exams", "are naive", "overcharge fees", "spoil kids",
    ];
    let mut out = Vec::new();
    for class in 0..10 {
        for variant in 0..5 {
            let post = format!("post variant{variant} about {}", groups[class]);
            let attrs = "<TOXIC> <NOT_SEVERE_TOXIC> <NOT_OBSCENE> <NOT_THREAT> <INSULT> <NOT_IDENTITY_ATTACK>";
            let (input_text, attr_tokens) = match infusion {
                Infusion::C1 => (format!("{post} [SEP] {attrs}"), None),
                Infusion::C2 => (format!("{post} [SEP] offensive {}", groups[class]), None),
                Infusion::C5 => (post.clone(), Some(attrs.to_string())),
                _ => (post.clone(), None),
            };
            out.push(GenExample {
                post_id: format!("c{class}v{variant}"),
                input_text,
                probabilities: None,
                attr_tokens,
                target: format!("{} {}", groups[class], claims[class]),
            });
        }
    }
    out
}

fn criterion_6() -> Check {
    let decode = DecodeParams {
        beams: 1,
        length_penalty: 5.0,
        max_length: 8,
    };
    for infusion in [Infusion::None, Infusion::C1, Infusion::C2, Infusion::C5] {
        let cfg = GenConfig {
            d_model: 24,
            ffn_dim: 48,
            max_len: 32,
            max_vocab: 300,
            epochs: 200,
            batch_size: 10,
            // The CoDA fusion path converges best slightly faster.
            learning_rate: if infusion == Infusion::C5 { 0.03 } else { 0.02 },
            seed: 6,
            coda_alpha: 1.0,
        };
        let examples = overfit_examples(infusion);
        let model = train_generator::<f64>(&examples, infusion, &cfg).map_err(|e| e.to_string())?;
        let gens = generate(&model, &examples, &decode).map_err(|e| e.to_string())?;
        let exact = gens
            .iter()
            .zip(&examples)
            .filter(|(g, e)| g.text == e.target)
            .count();
        if exact < 45 {
            return fail(format!("{infusion:?}: only {exact}/50 exact-match regenerations"));
        }

        // Identical seed+config reproduces the loss curve bit for bit
        // (checked on a short run; determinism is epoch-independent).
        let short = GenConfig { epochs: 5, ..cfg.clone() };
        let once = train_generator::<f64>(&examples, infusion, &short).map_err(|e| e.to_string())?;
        let again = train_generator::<f64>(&examples, infusion, &short).map_err(|e| e.to_string())?;
        if again.training_log.epoch_losses != once.training_log.epoch_losses {
            return fail(format!("{infusion:?}: loss curve not reproduced for identical seed"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 7: regressor beats the constant-mean predictor by >= 20%.
// ---------------------------------------------------------------------------
fn synthetic_toxicity_records(n: usize, seed: u64) -> Vec<ToxicityRecord> {
    let benign = [
        "weather", "coffee", "garden", "music", "travel", "books", "cooking", "sports",
        "painting", "movies", "hiking", "photos",
    ];
    let nasty = ["idiot", "stupid", "trash", "moron", "scum", "loser"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let n_nasty = rng.gen_range(0..=5usize);
            let mut words: Vec<&str> = (0..n_nasty)
                .map(|_| nasty[rng.gen_range(0..nasty.len())])
                .collect();
            words.extend((0..(10 - n_nasty)).map(|_| benign[rng.gen_range(0..benign.len())]));
            let base = n_nasty as f64 / 5.0;
            let noise = rng.gen_range(-0.05..0.05);
            let labels = [
                (0.9 * base + noise).clamp(0.0, 1.0),
                (0.4 * base).clamp(0.0, 1.0),
                (0.3 * base + noise).clamp(0.0, 1.0),
                (0.1 * base).clamp(0.0, 1.0),
                (0.8 * base - noise).clamp(0.0, 1.0),
                (0.2 * base).clamp(0.0, 1.0),
            ];
            ToxicityRecord {
                text: words.join(" "),
                labels,
            }
        })
        .collect()
}

fn criterion_7() -> Check {
    let records = synthetic_toxicity_records(10_000, 700);
    let (train, eval) = stratified_split(&records, 0.2, 700);
    let cfg = RegressorConfig {
        epochs: 3,
        learning_rate: 0.5,
        seed: 700,
        ..RegressorConfig::default()
    };
    let model: RegressorF64 = train_regressor(&train, &cfg).map_err(|e| e.to_string())?;
    let model_rmse = model.evaluate_rmse(&eval).map_err(|e| e.to_string())?;
    let baseline = constant_mean_rmse(&train, &eval).map_err(|e| e.to_string())?;
    if model_rmse > 0.8 * baseline {
        return fail(format!(
            "regressor RMSE {model_rmse:.4} not >= 20% below constant-mean {baseline:.4}"
        ));
    }
    for rec in eval.iter().take(200) {
        let p = model.predict_probabilities(&rec.text);
        if p.0.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return fail(format!("prediction outside [0,1]: {:?}", p.0));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 8: six-config smoke grid end-to-end + all four report tables.
// ---------------------------------------------------------------------------
fn smoke_records(n: usize, prefix: &str, rng: &mut ChaCha8Rng) -> Vec<PostRecord> {
    let groups = ["women", "immigrants", "elders", "workers", "students"];
    let claims = ["are weak", "steal jobs", "cannot vote", "are lazy", "cheat exams"];
    (0..n)
        .map(|i| {
            let c = rng.gen_range(0..groups.len());
            let id = format!("{prefix}{i}");
            PostRecord {
                post: Post {
                    id: id.clone(),
                    text: format!("post number{i} about {}", groups[c]),
                    source_dataset: DatasetSchema::SbicLike,
                },
                references: ReferenceSet {
                    post_id: id,
                    references: vec![format!("{} {}", groups[c], claims[c])],
                },
                attributes: InDatasetAttributes {
                    target_group: groups[c].to_string(),
                    sbic_flags: Some(SbicFlags {
                        intentional: true,
                        offensive: true,
                        ..SbicFlags::default()
                    }),
                    implicit_class: None,
                },
                empty_references: false,
            }
        })
        .collect()
}

fn assert_no_empty_cells(path: &std::path::Path) -> Check {
    let content = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.contains(",,") || line.ends_with(',') {
            return fail(format!("{}: line {} has an empty cell", path.display(), i + 1));
        }
    }
    Ok(())
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let train = smoke_records(200, "tr", &mut rng);
    let test = smoke_records(20, "te", &mut rng);

    let mut data = ExperimentData {
        train: train.clone(),
        test: test.clone(),
        probabilities: HashMap::new(),
        kg_inputs: HashMap::new(),
    };
    for r in train.iter().chain(test.iter()) {
        let p: [f64; 6] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        data.probabilities.insert(r.post.id.clone(), p);
    }

    let base = ExperimentConfig {
        name: String::new(),
        dataset_id: "smoke".into(),
        infusion: Infusion::None,
        attribute_source: None,
        kg: None,
        lambda: 0.5,
        rendering: Rendering::SpecialTokens,
        decode: DecodeParams {
            beams: 2,
            length_penalty: 5.0,
            max_length: 8,
        },
        gen: GenConfig {
            d_model: 16,
            ffn_dim: 32,
            max_len: 32,
            max_vocab: 400,
            epochs: 5,
            batch_size: 20,
            learning_rate: 0.05,
            seed: 8,
            coda_alpha: 1.0,
        },
        seed: 8,
        output_dir: dir.path().join("runs"),
    };

    let grid = [
        ("vanilla", Infusion::None, None),
        ("c1", Infusion::C1, Some(AttributeSource::Regressor)),
        ("c2", Infusion::C2, Some(AttributeSource::InDataset)),
        ("c3", Infusion::C3, Some(AttributeSource::Regressor)),
        ("c4", Infusion::C4, Some(AttributeSource::Regressor)),
        ("c5", Infusion::C5, Some(AttributeSource::Regressor)),
    ];
    let mut results = Vec::new();
    for (name, infusion, source) in grid {
        let cfg = ExperimentConfig {
            name: name.to_string(),
            infusion,
            attribute_source: source,
            ..base.clone()
        };
        let result = run_experiment::<f64>(&cfg, &data)
            .map_err(|e| format!("run '{name}' failed: {e}"))?;
        if result.metrics.per_sample.len() != test.len() {
            return fail(format!(
                "run '{name}': {} scored posts, expected {}",
                result.metrics.per_sample.len(),
                test.len()
            ));
        }
        results.push(result);
    }

    // Table 1: per-run metrics.
    let tables = dir.path().join("tables");
    std::fs::create_dir_all(&tables).map_err(|e| e.to_string())?;
    let rows: Vec<_> = results
        .iter()
        .map(|r| (r.name.clone(), r.metrics.clone()))
        .collect();
    let metrics_csv = tables.join("metrics.csv");
    write_metrics_table(&metrics_csv, &rows).map_err(|e| e.to_string())?;

    // Table 2: each infused run vs the vanilla baseline on max-BLEU.
    let per_sample = |r: &toxgen_core::experiment::ExperimentResult| -> HashMap<String, f64> {
        r.metrics
            .per_sample
            .iter()
            .map(|s| (s.post_id.clone(), s.max_bleu))
            .collect()
    };
    let base_scores = per_sample(&results[0]);
    let mut sig_rows = Vec::new();
    for r in &results[1..] {
        let scores = per_sample(r);
        let mut ids: Vec<&String> = base_scores.keys().collect();
        ids.sort();
        let a: Vec<f64> = ids.iter().map(|id| scores[*id]).collect();
        let b: Vec<f64> = ids.iter().map(|id| base_scores[*id]).collect();
        let t = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
        sig_rows.push((r.name.clone(), "vanilla".to_string(), t));
    }
    let sig_csv = tables.join("significance.csv");
    write_significance_table(&sig_csv, &sig_rows).map_err(|e| e.to_string())?;

    // Tables 3 and 4: retrieval-score distribution and uniqueness, from a
    // retrieval pass over the synthetic KG.
    let mut kg_rng = ChaCha8Rng::seed_from_u64(809);
    let (tuples, posts) = synthetic_kg(&mut kg_rng);
    let index = KgIndex::build(tuples);
    let idf = toxgen_core::kg::compute_idf(&posts).map_err(|e| e.to_string())?;
    let scores_per_post: Vec<Vec<f64>> = posts
        .iter()
        .map(|p| {
            let scored: Vec<ScoredTuple> = retrieve_conceptnet_style(p, &index, &idf);
            scored.iter().take(5).map(|s| s.score).collect()
        })
        .collect();
    let dist = toxgen_core::analysis::score_distribution(
        &scores_per_post,
        &toxgen_core::analysis::Binning::RoundNearestTenth,
    )
    .map_err(|e| e.to_string())?;
    let dist_csv = tables.join("score_distribution.csv");
    write_score_distribution(&dist_csv, &dist).map_err(|e| e.to_string())?;
    let uniq = toxgen_core::analysis::uniqueness_histogram(&scores_per_post, 5);
    let uniq_csv = tables.join("uniqueness.csv");
    write_uniqueness_histogram(&uniq_csv, &uniq).map_err(|e| e.to_string())?;

    for path in [&metrics_csv, &sig_csv, &dist_csv, &uniq_csv] {
        assert_no_empty_cells(path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Harness.
// ---------------------------------------------------------------------------
#[test]
fn mandatory_acceptance_criteria() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("1 threshold transformation matches elementwise oracle", criterion_1),
        ("2 KG retrieval matches brute-force ranking", criterion_2),
        ("3 BLEU/ROUGE metric oracles", criterion_3),
        ("4 paired t-test matches reference statistics", criterion_4),
        ("5 CoDA numerics and fusion gradients", criterion_5),
        ("6 overfit smoke with loss-curve reproduction", criterion_6),
        ("7 regressor beats constant-mean baseline", criterion_7),
        ("8 six-config pipeline and report tables", criterion_8),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(()) => println!("criterion {name}: PASS"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({msg})");
                failures.push(format!("{name}: {msg}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}

// ---------------------------------------------------------------------------
// Full-scale tier: requires the real corpora and long training runs, so
// these are opt-in (`cargo test -- --ignored`) and read paths from env vars.
// ---------------------------------------------------------------------------

/// Vanilla baseline / C2 full-scale metric reproduction (Tables 2-level
/// tolerance: +-3.0 points). Requires TOXGEN_SBIC_DIR / TOXGEN_LATENT_DIR
/// pointing at prepared datasets and several GPU-hours of training.
#[test]
#[ignore = "full-scale: needs real corpora and long training"]
fn full_scale_baseline_metrics() {
    let sbic = std::env::var("TOXGEN_SBIC_DIR").expect("set TOXGEN_SBIC_DIR");
    assert!(std::path::Path::new(&sbic).exists());
    unimplemented!("train the vanilla and C2 configs at full scale and compare metric means");
}

/// Full regressor training to validation RMSE <= 0.08. Requires
/// TOXGEN_TOXICITY_CSV pointing at the labelled comment corpus.
#[test]
#[ignore = "full-scale: needs the real toxicity corpus"]
fn full_scale_regressor_rmse() {
    let path = std::env::var("TOXGEN_TOXICITY_CSV").expect("set TOXGEN_TOXICITY_CSV");
    assert!(std::path::Path::new(&path).exists());
    unimplemented!("train the regressor at full scale and assert validation RMSE <= 0.08");
}

/// Large-KG score audit: fraction(max tuple score >= 5) = 3.5% +- 1pp on the
/// real test split. Requires TOXGEN_KG_TSV and TOXGEN_SBIC_DIR.
#[test]
#[ignore = "full-scale: needs the real commonsense KG dump"]
fn full_scale_kg_score_audit() {
    let path = std::env::var("TOXGEN_KG_TSV").expect("set TOXGEN_KG_TSV");
    assert!(std::path::Path::new(&path).exists());
    unimplemented!("retrieve over the full KG and compare fraction_max_ge_5 to 0.035 +- 0.01");
}

/// Top/bottom/random-k effect sizes: |d| < 0.5 among KG modes, |d| > 1 with
/// p <= 0.001 against vanilla. Requires full-scale trained runs.
#[test]
#[ignore = "full-scale: needs trained KG-infusion runs"]
fn full_scale_kg_mode_effect_sizes() {
    unimplemented!("compare cached run results across the three KG modes and vanilla");
}
