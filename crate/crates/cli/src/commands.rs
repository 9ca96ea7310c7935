use std::collections::BTreeSet;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;
use srl_transfer::baselines::{
    all_a0, arg2vec, direct_transfer_trainer, factorization_fit, syntfun, Embeddings, MostFrequent,
};
use srl_transfer::corpus::{
    apply_preposition_headwords, apply_verbalization, filter_corpus, generate_synthetic, identification_counts,
    identify_arguments, parse_conll, pseudo_label_augment, read_corpus_file, write_corpus_file, AugmentConfig,
    AugmentReport, Corpus, Domain, IdentificationCounts, VerbalizationMap,
};
use srl_transfer::evaluation::{
    analyze_bc, bc_table, clustering_scores, clustering_table, model_records, read_predictions_file, supervised_scores,
    supervised_table, write_predictions_file, PredictionRecord, SupervisedConfig,
};
use srl_transfer::model::Model;
use srl_transfer::trainer::{Trainer, TrainingConfig};

use crate::args::*;
use crate::run::{io_err, read_text, write_json, write_text, CliError, CliResult, Run};

fn load_corpus(run: &mut Run, path: &Path) -> CliResult<Corpus> {
    run.input(path)?;
    Ok(read_corpus_file(path)?)
}

fn save_corpus(run: &mut Run, name: &str, corpus: &Corpus) -> CliResult<()> {
    write_corpus_file(corpus, run.output(name))?;
    Ok(())
}

fn save_predictions(run: &mut Run, records: &[PredictionRecord]) -> CliResult<()> {
    write_predictions_file(records, &run.output("predictions.jsonl"))?;
    Ok(())
}

pub fn prepare(run: &mut Run, a: &PrepareArgs) -> CliResult<()> {
    let cfg = run.config.filter.clone();
    let verbal = parse_conll(&read_text(&run.input(&a.verbal_conll)?)?, Domain::Verbal)?;
    let mut nominal = parse_conll(&read_text(&run.input(&a.nominal_conll)?)?, Domain::Nominal)?;
    if let Some(path) = &a.verbalization {
        let map = VerbalizationMap::parse_tsv(&read_text(&run.input(path)?)?)?;
        nominal = apply_verbalization(&nominal, &map)?;
    }
    let (verbal, unresolved_verbal) = apply_preposition_headwords(&verbal, &cfg)?;
    let (nominal, unresolved_nominal) = apply_preposition_headwords(&nominal, &cfg)?;
    let (verbal, nominal, filter) = filter_corpus(&verbal, &nominal, &cfg)?;
    save_corpus(run, "verbal.jsonl", &verbal)?;
    save_corpus(run, "nominal.jsonl", &nominal)?;
    if let Some(path) = &a.pool_conll {
        let pool = parse_conll(&read_text(&run.input(path)?)?, Domain::Verbal)?;
        save_corpus(run, "pool.jsonl", &pool.without_labels().remap_roles(&cfg.roles)?)?;
    }

    #[derive(Serialize)]
    struct Report {
        filter: srl_transfer::corpus::FilterReport,
        unresolved_prepositions_verbal: Vec<String>,
        unresolved_prepositions_nominal: Vec<String>,
        verbal_instances: usize,
        nominal_instances: usize,
    }
    let report = Report {
        verbal_instances: verbal.num_instances(),
        nominal_instances: nominal.num_instances(),
        filter,
        unresolved_prepositions_verbal: unresolved_verbal,
        unresolved_prepositions_nominal: unresolved_nominal,
    };
    println!(
        "kept {} predicates: {} verbal and {} nominal instances",
        report.filter.kept_predicates.len(),
        report.verbal_instances,
        report.nominal_instances
    );
    write_json(&run.output("prepare_report.json"), &report)
}

pub fn synth(run: &mut Run, a: &SynthArgs) -> CliResult<()> {
    let seed = run.config.seed;
    let (verbal, nominal, oracle) = generate_synthetic(&run.config.synthetic, seed)?;
    let offset = |k: u64| seed.wrapping_add(k.wrapping_mul(0x9E37_79B9));
    let test = oracle.held_out(a.n_test, Domain::Nominal, offset(1))?;
    save_corpus(run, "verbal.jsonl", &verbal)?;
    save_corpus(run, "nominal.jsonl", &nominal)?;
    save_corpus(run, "nominal_gold.jsonl", &oracle.reveal(&nominal)?)?;
    save_corpus(run, "dev.jsonl", &oracle.held_out(a.n_dev, Domain::Verbal, offset(2))?)?;
    save_corpus(run, "test.jsonl", &test)?;
    if a.n_pool > 0 {
        save_corpus(run, "pool.jsonl", &oracle.held_out(a.n_pool, Domain::Verbal, offset(3))?.without_labels())?;
    }

    #[derive(Serialize)]
    struct OracleSummary {
        exact_bayes_accuracy: f64,
        test_bayes_accuracy: f64,
    }
    let summary = OracleSummary {
        exact_bayes_accuracy: oracle.exact_bayes_accuracy(),
        test_bayes_accuracy: oracle.bayes_accuracy(&test)?,
    };
    write_json(&run.output("oracle.json"), &summary)
}

/// Pseudo-labels `pool` with a Direct-transfer labeler trained on `verbal`.
fn augmentation(
    training: &TrainingConfig,
    augment: &AugmentConfig,
    verbal: &Corpus,
    dev: Option<&Corpus>,
    pool: &Corpus,
    targets: &BTreeSet<String>,
    sizes: &[usize],
) -> CliResult<Vec<(Corpus, AugmentReport)>> {
    let mut labeler = direct_transfer_trainer(training, verbal, dev)?;
    labeler.train(None)?;
    let pool = pool.remap_roles(verbal.roles())?;
    sizes
        .iter()
        .map(|&n| {
            let cfg = AugmentConfig { n_per_pred: n, ..augment.clone() };
            Ok(pseudo_label_augment(&labeler.model, &pool, targets, &cfg, training.seed)?)
        })
        .collect()
}

pub fn train(run: &mut Run, a: &TrainArgs) -> CliResult<()> {
    run.config.apply_training_flags(&a.training)?;
    if let Some(n) = a.n_augment {
        run.config.augment.n_per_pred = n;
    }
    let verbal = load_corpus(run, &a.verbal)?;
    let nominal = load_corpus(run, &a.nominal)?;
    let dev = a.dev.as_deref().map(|p| load_corpus(run, p)).transpose()?;
    let tc = run.config.training.clone();

    let mut train_verbal = verbal.clone();
    match (&a.pool, tc.use_augmentation) {
        (Some(path), true) => {
            let pool = load_corpus(run, path)?;
            let mut aug = augmentation(
                &tc,
                &run.config.augment,
                &verbal,
                dev.as_ref(),
                &pool,
                &nominal.predicate_lemmas(),
                &[run.config.augment.n_per_pred],
            )?;
            let (corpus, report) = aug.remove(0);
            eprintln!("augmentation: {} pseudo-labeled instances", corpus.num_instances());
            train_verbal = train_verbal.concat(&corpus)?;
            save_corpus(run, "augment.jsonl", &corpus)?;
            write_json(&run.output("augment_report.json"), &report)?;
        }
        (Some(_), false) => eprintln!("augmentation disabled; ignoring --pool"),
        (None, true) => eprintln!("no --pool given; training without augmentation"),
        (None, false) => {}
    }

    let mut trainer = Trainer::new(tc, &train_verbal, &nominal, dev.as_ref())?;
    let train_dir = run.dir.join("train");
    let outcome = trainer.train(Some(&train_dir));
    run.output_tree("train")?;
    let outcome = outcome?;
    for e in &outcome.state.epochs {
        println!("{}", serde_json::to_string(e).map_err(srl_transfer::Error::from)?);
    }
    write_json(&run.output("train_state.json"), &outcome.state)
}

pub fn label(run: &mut Run, a: &LabelArgs) -> CliResult<()> {
    for f in ["model.json", "params.bin"] {
        run.input(&a.model.join(f))?;
    }
    let model = Model::load(&a.model)?;
    let corpus = load_corpus(run, &a.corpus)?;
    save_predictions(run, &model_records(&model, &corpus)?)?;
    save_corpus(run, "labeled.jsonl", &model.label_corpus(&corpus)?)
}

fn require<'a>(path: &'a Option<std::path::PathBuf>, flag: &str, kind: BaselineKind) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("{kind:?} needs --{flag}")))
}

pub fn baseline(run: &mut Run, a: &BaselineArgs) -> CliResult<()> {
    run.config.apply_training_flags(&a.training)?;
    let corpus = load_corpus(run, &a.corpus)?;
    let records = match a.kind {
        BaselineKind::AllA0 => all_a0(&corpus)?,
        BaselineKind::Syntfun => syntfun(&corpus)?,
        BaselineKind::Arg2vec => {
            let path = require(&a.embeddings, "embeddings", a.kind)?;
            run.input(path)?;
            let file = std::fs::File::open(path).map_err(io_err(path))?;
            let emb = Embeddings::read_text(BufReader::new(file))?;
            arg2vec(&corpus, &emb, a.clusters)?
        }
        BaselineKind::MostFrequent => {
            let verbal = load_corpus(run, require(&a.verbal, "verbal", a.kind)?)?;
            let mf = MostFrequent::fit(&verbal)?;
            write_json(&run.output("most_frequent.json"), &mf)?;
            mf.records(&corpus)?
        }
        BaselineKind::Factorization => {
            let verbal = load_corpus(run, require(&a.verbal, "verbal", a.kind)?)?;
            let params = factorization_fit(&verbal, &run.config.factorization)?;
            write_json(&run.output("factorization.json"), &params)?;
            params.records(&corpus)?
        }
        BaselineKind::DirectTransfer => {
            let verbal = load_corpus(run, require(&a.verbal, "verbal", a.kind)?)?;
            let dev = a.dev.as_deref().map(|p| load_corpus(run, p)).transpose()?;
            let mut t = direct_transfer_trainer(&run.config.training, &verbal, dev.as_ref())?;
            let outcome = t.train(Some(&run.dir.join("train")));
            run.output_tree("train")?;
            outcome?;
            model_records(&t.model, &corpus)?
        }
    };
    save_predictions(run, &records)
}

pub fn eval(run: &mut Run, a: &EvalArgs) -> CliResult<()> {
    if a.drop_self_loops {
        run.config.evaluation.drop_self_loops = true;
    }
    if a.macro_all {
        run.config.evaluation.macro_all = true;
    }
    let cfg: SupervisedConfig = run.config.evaluation;
    run.input(&a.predictions)?;
    let records = read_predictions_file(&a.predictions)?;
    let table = if a.clustering {
        let scores = clustering_scores(&records, cfg.drop_self_loops)?;
        write_json(&run.output("report.json"), &scores)?;
        clustering_table(&scores)
    } else {
        let report = supervised_scores(&records, cfg)?;
        write_json(&run.output("report.json"), &report)?;
        supervised_table(&report)
    };
    print!("{table}");
    write_text(&run.output("report.txt"), &table)
}

pub fn analyze_bc_cmd(run: &mut Run, a: &AnalyzeBcArgs) -> CliResult<()> {
    let verbal = load_corpus(run, &a.verbal)?;
    let nominal = load_corpus(run, &a.nominal)?;
    let report = analyze_bc(&verbal, &nominal, run.config.bc)?;
    if report.entries.iter().any(|e| !e.contributions_reproduce()) {
        return Err(CliError::Data("argument contributions do not reproduce".into()));
    }
    write_json(&run.output("bc.json"), &report)?;
    let table = bc_table(&report, a.top);
    print!("{table}");
    write_text(&run.output("bc.txt"), &table)
}

pub fn identify(run: &mut Run, a: &IdentifyArgs) -> CliResult<()> {
    let domain = match a.domain {
        DomainArg::Verbal => Domain::Verbal,
        DomainArg::Nominal => Domain::Nominal,
    };
    let corpus = parse_conll(&read_text(&run.input(&a.conll)?)?, domain)?;
    let cfg = &run.config.identify.clone();

    #[derive(Serialize)]
    struct Identified {
        instance: String,
        predicate: String,
        predicate_token: usize,
        identified: Vec<usize>,
        gold: Vec<usize>,
    }
    let mut rows = Vec::new();
    for (s, p) in corpus.instances() {
        rows.push(Identified {
            instance: s.instance_id(p),
            predicate: p.lemma.clone(),
            predicate_token: p.token_index,
            identified: identify_arguments(s, p.token_index, cfg)?.into_iter().collect(),
            gold: p.argument_indices(),
        });
    }
    let mut lines = String::new();
    for r in &rows {
        lines.push_str(&serde_json::to_string(r).map_err(srl_transfer::Error::from)?);
        lines.push('\n');
    }
    write_text(&run.output("identified.jsonl"), &lines)?;

    #[derive(Serialize)]
    struct Report {
        counts: IdentificationCounts,
        precision: f64,
        recall: f64,
        f1: f64,
    }
    let counts = identification_counts(&corpus, cfg)?;
    let report = Report { counts, precision: counts.precision(), recall: counts.recall(), f1: counts.f1() };
    println!(
        "identification over {} predicates: P {:.2} R {:.2} F1 {:.2}",
        rows.len(),
        100.0 * report.precision,
        100.0 * report.recall,
        100.0 * report.f1
    );
    write_json(&run.output("identify_report.json"), &report)
}

pub fn sweep_augment(run: &mut Run, a: &SweepArgs) -> CliResult<()> {
    run.config.apply_training_flags(&a.training)?;
    if a.sizes.is_empty() {
        return Err(CliError::Config("--sizes needs at least one value".into()));
    }
    let verbal = load_corpus(run, &a.verbal)?;
    let nominal = load_corpus(run, &a.nominal)?;
    let pool = load_corpus(run, &a.pool)?;
    let test = load_corpus(run, &a.test)?;
    let dev = a.dev.as_deref().map(|p| load_corpus(run, p)).transpose()?;
    let tc = run.config.training.clone();
    let augmented =
        augmentation(&tc, &run.config.augment, &verbal, dev.as_ref(), &pool, &nominal.predicate_lemmas(), &a.sizes)?;

    #[derive(Serialize)]
    struct Point {
        n_augment: usize,
        augmented_instances: usize,
        accuracy: f64,
        all_f1: f64,
    }
    let mut points = Vec::new();
    let mut tsv = String::from("n_augment\taugmented_instances\taccuracy\tall_f1\n");
    for (&n, (aug, _)) in a.sizes.iter().zip(&augmented) {
        let mut trainer = Trainer::new(tc.clone(), &verbal.concat(aug)?, &nominal, dev.as_ref())?;
        trainer.train(None)?;
        let report = supervised_scores(&model_records(&trainer.model, &test)?, run.config.evaluation)?;
        let p = Point {
            n_augment: n,
            augmented_instances: aug.num_instances(),
            accuracy: report.accuracy,
            all_f1: report.all.f1,
        };
        println!("n_augment {n}: {} instances, accuracy {:.4}", p.augmented_instances, p.accuracy);
        tsv.push_str(&format!("{}\t{}\t{:.6}\t{:.6}\n", p.n_augment, p.augmented_instances, p.accuracy, p.all_f1));
        points.push(p);
    }
    write_json(&run.output("sweep.json"), &points)?;
    write_text(&run.output("sweep.tsv"), &tsv)
}
