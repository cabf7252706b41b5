"""
Purpose of the script: organises the steps of a run behind one command,
`dictguide`, so that every experiment can be repeated from a shell:

    > dictguide gen-data --lexicon-size 2000
    > dictguide build-index
    > dictguide train --stage both
    > dictguide eval --format table
    > dictguide ablate-candidates
    > dictguide ablate-resemblants
    > dictguide correct --label tirelness
    > dictguide inspect --sample 17

Every path defaults to a file under the data directory (DICTGUIDE_DATA_DIR,
or ./data). Errors are logged and turned into the exit code of their class.
"""
# Imports
# -------------------------------------------------------------------------
# Python:
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# 3rd party:
import numpy as np
import pandas as pd

# Local
from dictguide import harness, pipeline
from dictguide import neural_core as nc
from dictguide.exceptions import DictGuideError, InvalidConfig
from dictguide.glyph_world import (DatasetSpec, dataset_digest,
                                   default_confusion_table, generate_dataset,
                                   load_confusion_table, load_dataset, perturb,
                                   render, save_dataset)
from dictguide.lexicon_index import (generate_lexicon, load_lexicon,
                                     load_or_build_index, normalize_word,
                                     radius_query, save_lexicon)
from dictguide.params import params
from dictguide.utilities import data_connections
from dictguide.utilities.data_connections import data_path

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


# Define shared helpers
# -------------------------------------------------------------------------
def _path(value: Optional[str], default: str) -> Path:
    return Path(value) if value else data_path(default)


def _table(args):
    return load_confusion_table(args.confusion_table) if args.confusion_table else default_confusion_table()


def _lexicon(args):
    return load_lexicon(_path(args.lexicon, 'lexicon.txt'))


def _index(args, lexicon):
    return load_or_build_index(lexicon, _path(args.index, 'lexicon.idx'))


def _manifest_path(model_path: Path) -> Path:
    return model_path.with_name(model_path.name + '.manifest.json')


def _manifest_digest(model_path: Path) -> str:
    manifest = _manifest_path(model_path)
    if manifest.exists():
        return data_connections.read_json(manifest).get('digest', '')
    return ''


def _train_config(args) -> pipeline.TrainConfig:
    dims = nc.ModelDims(channels=args.channels, proj_dim=args.proj_dim)
    return pipeline.TrainConfig.from_params(
        batch_size=args.batch_size, resemblant_count=args.resemblant_count,
        stage1_epochs=args.stage1_epochs, stage2_epochs=args.stage2_epochs,
        stage1_lr=args.stage1_lr, stage2_lr=args.stage2_lr, stage2_lambdas=args.stage2_lambdas,
        optimizer=args.optimizer, temperature=args.temperature, init_seed=args.init_seed,
        train_seed=args.train_seed, dims=dims)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from err


def _weight_pair(text: str) -> Tuple[float, float]:
    try:
        weights = tuple(float(v) for v in text.split(','))
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected two comma-separated weights, got {text!r}") from err
    if len(weights) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated weights, got {text!r}")
    return weights


def _sample_image(args, table):
    """The image a one-shot command works on: a dataset sample or a rendered label."""
    if args.label:
        label = normalize_word(args.label)
        image = render(label)
        if args.noise_rate > 0 or args.smear > 0:
            image = perturb(image, table, args.noise_rate, args.smear, args.noise_seed)
        return image, label
    _, _, test = load_dataset(_path(args.dataset, 'dataset.jsonl'))
    if not 0 <= args.sample < len(test):
        raise InvalidConfig(f"sample {args.sample} out of range for {len(test)} test samples")
    return test[args.sample].image, test[args.sample].label


# Define subcommands
# -------------------------------------------------------------------------
def cmd_gen_data(args) -> int:
    table = _table(args)
    lexicon_path = _path(args.lexicon, 'lexicon.txt')
    if lexicon_path.exists() and not args.new_lexicon:
        lexicon = load_lexicon(lexicon_path)
    else:
        lexicon = generate_lexicon(args.lexicon_size, args.lexicon_seed)
        save_lexicon(lexicon, data_connections.ensure_parent(lexicon_path))
    spec = DatasetSpec.from_params(seed=args.seed, train_size=args.train_size, test_size=args.test_size,
                                   noise_rate=args.noise_rate, smear=args.smear,
                                   out_of_lexicon_fraction=args.out_of_lexicon_fraction)
    train, test = generate_dataset(spec, lexicon, table)
    out = data_connections.ensure_parent(_path(args.out, 'dataset.jsonl'))
    digest = save_dataset(out, spec, train, test)
    print(f"{out} {digest}")
    return 0


def cmd_build_index(args) -> int:
    lexicon = _lexicon(args)
    out = data_connections.ensure_parent(_path(args.index, 'lexicon.idx'))
    index = load_or_build_index(lexicon, out)
    print(f"{out} {index.word_count} words")
    return 0


def cmd_train(args) -> int:
    config = _train_config(args)
    spec, train, test = load_dataset(_path(args.dataset, 'dataset.jsonl'))
    lexicon = _lexicon(args)
    table = _table(args)
    model_path = data_connections.ensure_parent(_path(args.model, 'model.vdmp'))
    if args.stage in ('1', 'both'):
        p, _ = pipeline.train_stage1(config, train)
    else:
        p = nc.load_params(_path(args.init, 'stage1.vdmp'), config.dims)
    if args.stage == '1':
        nc.save_params(p, model_path)
    else:
        if args.stage == 'both' and args.keep_stage1:
            nc.save_params(p, data_connections.ensure_parent(_path(args.init, 'stage1.vdmp')))
        p, _ = pipeline.train_stage2(config, train, p, table)
        nc.save_params(p, model_path)
    manifest = pipeline.RunManifest.build(config, spec, dataset_digest(train, test),
                                          lexicon.source_digest, args.top_n, config.temperature)
    manifest.write_manifest(_manifest_path(model_path))
    print(f"{model_path} {manifest.digest()}")
    return 0


def cmd_eval(args) -> int:
    model_path = _path(args.model, 'model.vdmp')
    p = nc.load_params(model_path)
    _, _, test = load_dataset(_path(args.dataset, 'dataset.jsonl'))
    index = _index(args, _lexicon(args))
    report = harness.evaluate(p, index, test, args.top_n, nc.ITCConfig(args.temperature), _manifest_digest(model_path))
    out = _path(args.report, f"report.{'json' if args.format == 'json' else 'txt'}")
    harness.emit_report(report, out, args.format)
    for mode, acc in report.accuracies.items():
        print(f"{mode:<9} {acc:.4f}")
    return 0


def _print_grid(grid: harness.AblationGrid, out: Optional[str]) -> None:
    frame = grid.to_frame()
    print(f"{grid.axis}")
    print(frame.to_string(index=False))
    for name, value in grid.reference.items():
        print(f"{name} reference {value:.4f}")
    if out:
        data_connections.write_json(data_connections.ensure_parent(out), {
            'axis': grid.axis, 'values': list(grid.values), 'accuracies': list(grid.accuracies),
            'reference': grid.reference})


def cmd_ablate_candidates(args) -> int:
    p = nc.load_params(_path(args.model, 'model.vdmp'))
    _, _, test = load_dataset(_path(args.dataset, 'dataset.jsonl'))
    index = _index(args, _lexicon(args))
    grid = harness.ablate_candidates(p, index, test, args.values, nc.ITCConfig(args.temperature))
    _print_grid(grid, args.out)
    return 0


def cmd_ablate_resemblants(args) -> int:
    config = _train_config(args)
    _, train, test = load_dataset(_path(args.dataset, 'dataset.jsonl'))
    index = _index(args, _lexicon(args))
    stage1 = nc.load_params(args.init, config.dims) if args.init else None
    grid = harness.ablate_resemblants(config, train, test, index, args.values, args.top_n,
                                      stage1, _table(args))
    _print_grid(grid, args.out)
    return 0


def cmd_correct(args) -> int:
    p = nc.load_params(_path(args.model, 'model.vdmp'))
    index = _index(args, _lexicon(args))
    image, label = _sample_image(args, _table(args))
    print(f"label     {label}")
    for mode in ('baseline', 'ordinary', 'proposed'):
        result = pipeline.infer(p, index, image, args.top_n, nc.ITCConfig(args.temperature), mode)
        print(f"{mode:<9} {result.final}")
    return 0


def cmd_inspect(args) -> int:
    p = nc.load_params(_path(args.model, 'model.vdmp'))
    index = _index(args, _lexicon(args))
    image, label = _sample_image(args, _table(args))
    result = pipeline.infer(p, index, image, args.top_n, nc.ITCConfig(args.temperature), 'proposed')
    candidates = result.candidates
    frame = pd.DataFrame({'candidate': candidates.entries, 'distance': candidates.distances,
                          'i2t': np.round(result.scores, 4)})
    frame['chosen'] = frame['candidate'] == result.final
    print(f"label {label!r}  visual prediction {result.visual_prediction!r}  final {result.final!r}")
    print(frame.to_string(index=False))
    if args.radius is not None:
        near = radius_query(index, result.visual_prediction, args.radius)
        print(f"\nwithin distance {args.radius}: " + ', '.join(f"{c.word}({c.distance})" for c in near))
    return 0


# Define build_parser()
# -------------------------------------------------------------------------
def _add_common(sub):
    sub.add_argument('--lexicon', help="lexicon file (default: <data>/lexicon.txt)")
    sub.add_argument('--index', help="index cache file (default: <data>/lexicon.idx)")
    sub.add_argument('--dataset', help="dataset file (default: <data>/dataset.jsonl)")
    sub.add_argument('--confusion-table', help="confusion table file (default: shipped table)")


def _add_model(sub):
    sub.add_argument('--model', help="model file (default: <data>/model.vdmp)")
    sub.add_argument('--top-n', type=int, default=params['top_n'])
    sub.add_argument('--temperature', type=float, default=params['temperature'])


def _add_training(sub):
    sub.add_argument('--batch-size', type=int, default=params['batch_size'])
    sub.add_argument('--resemblant-count', type=int, default=params['resemblant_count'])
    sub.add_argument('--stage1-epochs', type=int, default=params['stage1_epochs'])
    sub.add_argument('--stage2-epochs', type=int, default=params['stage2_epochs'])
    sub.add_argument('--stage1-lr', type=float, default=params['stage1_lr'])
    sub.add_argument('--stage2-lr', type=float, default=params['stage2_lr'])
    sub.add_argument('--stage2-lambdas', type=_weight_pair, default=params['stage2_lambdas'],
                     help="recognition and matching weights of stage 2, e.g. 1,1")
    sub.add_argument('--optimizer', choices=('sgd', 'adam'), default=params['optimizer'])
    sub.add_argument('--channels', type=int, default=params['channels'])
    sub.add_argument('--proj-dim', type=int, default=params['proj_dim'])
    sub.add_argument('--init-seed', type=int, default=params['init_seed'])
    sub.add_argument('--train-seed', type=int, default=params['train_seed'])
    sub.add_argument('--init', help="stage-1 model file to start from")


def _add_sample(sub):
    sub.add_argument('--label', help="render this word instead of reading a dataset sample")
    sub.add_argument('--sample', type=int, default=0, help="test sample number in the dataset")
    sub.add_argument('--noise-rate', type=float, default=0.0)
    sub.add_argument('--smear', type=float, default=0.0)
    sub.add_argument('--noise-seed', type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='dictguide',
                                     description="Dictionary-guided text recognition on a synthetic glyph world")
    parser.add_argument('--log-level', default='INFO',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    subs = parser.add_subparsers(dest='command', required=True)

    sub = subs.add_parser('gen-data', help="generate a lexicon (if needed) and a dataset")
    _add_common(sub)
    sub.add_argument('--out', help="dataset file to write (default: <data>/dataset.jsonl)")
    sub.add_argument('--new-lexicon', action='store_true', help="regenerate the lexicon even if it exists")
    sub.add_argument('--lexicon-size', type=int, default=params['lexicon_size'])
    sub.add_argument('--lexicon-seed', type=int, default=params['lexicon_seed'])
    sub.add_argument('--seed', type=int, default=params['dataset_seed'])
    sub.add_argument('--train-size', type=int, default=params['train_size'])
    sub.add_argument('--test-size', type=int, default=params['test_size'])
    sub.add_argument('--noise-rate', type=float, default=params['noise_rate'])
    sub.add_argument('--smear', type=float, default=params['smear'])
    sub.add_argument('--out-of-lexicon-fraction', type=float, default=params['out_of_lexicon_fraction'])
    sub.set_defaults(func=cmd_gen_data)

    sub = subs.add_parser('build-index', help="build and cache the lexicon index")
    _add_common(sub)
    sub.set_defaults(func=cmd_build_index)

    sub = subs.add_parser('train', help="train stage 1, stage 2 or both")
    _add_common(sub)
    _add_model(sub)
    _add_training(sub)
    sub.add_argument('--stage', choices=('1', '2', 'both'), default='both')
    sub.add_argument('--keep-stage1', action='store_true', help="also save the stage-1 model to --init")
    sub.set_defaults(func=cmd_train)

    sub = subs.add_parser('eval', help="evaluate the three modes on the test split")
    _add_common(sub)
    _add_model(sub)
    sub.add_argument('--report', help="report file (default: <data>/report.json or .txt)")
    sub.add_argument('--format', choices=harness.REPORT_FORMATS, default='json')
    sub.set_defaults(func=cmd_eval)

    sub = subs.add_parser('ablate-candidates', help="proposed accuracy per candidate count")
    _add_common(sub)
    _add_model(sub)
    sub.add_argument('--values', type=_int_list, default=list(params['candidate_grid']))
    sub.add_argument('--out', help="write the grid as JSON")
    sub.set_defaults(func=cmd_ablate_candidates)

    sub = subs.add_parser('ablate-resemblants', help="retrain the matcher per resemblant count")
    _add_common(sub)
    _add_model(sub)
    _add_training(sub)
    sub.add_argument('--values', type=_int_list, default=list(params['resemblant_grid']))
    sub.add_argument('--out', help="write the grid as JSON")
    sub.set_defaults(func=cmd_ablate_resemblants)

    sub = subs.add_parser('correct', help="three-mode outputs for one image")
    _add_common(sub)
    _add_model(sub)
    _add_sample(sub)
    sub.set_defaults(func=cmd_correct)

    sub = subs.add_parser('inspect', help="candidate set, distances and i2t scores for one image")
    _add_common(sub)
    _add_model(sub)
    _add_sample(sub)
    sub.add_argument('--radius', type=int, help="also list lexicon words within this distance")
    sub.set_defaults(func=cmd_inspect)
    return parser


# Define main()
# -------------------------------------------------------------------------
def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        return args.func(args)
    except DictGuideError as err:
        logger.error("%s error: %s", err.category, err)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
