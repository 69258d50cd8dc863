"""
Command line interface of grf-shape.

    grf-shape gen blobs --alpha 0.35 --beta 0.5 -o blobs.json
    grf-shape sample-prior blobs.json -o sample.pgm
    grf-shape structure shrink --labelling sample.pgm --labels 2 --d 6 --target-size 8 -o structure.json
    grf-shape structure grow --labelling sample.pgm --labels 2 --d 6 --target-size 8 --repeat 10 --histogram structures.png

Every input and output is a file. If an output path is omitted, the output is written to
'datadir/nameXXX.ext', where XXX is the next free number.
Exit codes: 0 success, 1 'oracle equal' found different distributions, 2 invalid input, 3 runtime error.
"""
import argparse
import logging
import sys
from dataclasses import asdict, replace
from os import path

import numpy as np
import matplotlib.pyplot as plt

from grf_shape import settings as _settings
from grf_shape.settings import settings, find_config_path, load_settings
from grf_shape.errors import GrfError, MissingAppearance, DimensionMismatch
from grf_shape.core.grid import GridDomain, LabelSet, count_statistics
from grf_shape.core.evidence import Evidence
from grf_shape.core.appearance import init_appearance
from grf_shape.core.sampler import SamplerConfig, init_chain, estimate_statistics
from grf_shape.core import oracle
from grf_shape.learning.potentials import LearningSchedule, TrainingEvent, learn_potentials, learn_from_statistics, learn_appearance
from grf_shape.learning.structure import CandidateRange, grow_structure, shrink_structure, structure_histogram
from grf_shape.learning.composition import MixtureWeights, LabelMapping, compose_models, compose_appearance
from grf_shape.segmentation import segment, hamming_loss, pixel_accuracy
from grf_shape.utility import file_io, synthetic
from grf_shape.utility.data import save_dataframe, plot_trace, plot_labelling, plot_structure_histogram
from grf_shape.update_funcs import _update_print, _Monitor

log = logging.getLogger("grf_shape")

EXIT_NOT_EQUAL = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _common_parser() -> argparse.ArgumentParser:
    """Flags accepted by every subcommand, None means: use the setting"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--sweeps", type=int, help="sweeps of sample-prior / inner sweeps per learning iteration")
    common.add_argument("--burn-in", type=int, dest="burn_in")
    common.add_argument("--samples", type=int, help="retained samples")
    common.add_argument("--thinning", type=int)
    common.add_argument("--chains", type=int, help="independent replicas per chain")
    common.add_argument("--step0", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--iters", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--target-size", type=int, dest="target_size")
    common.add_argument("--metric", choices=["euclid", "kl"])
    common.add_argument("--w0", type=float)
    common.add_argument("--w1", type=float)
    common.add_argument("--w2", type=float)
    common.add_argument("--scan", choices=["raster", "random", "block"])
    common.add_argument("--threads", type=int, help="worker bound, results do not depend on it")
    common.add_argument("-c", "--config", action="store", help="alternate path to config file")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--monitor", action="store_true", help="live plot of the learning trace")
    return common


def _evidence_args(p: argparse.ArgumentParser):
    p.add_argument("--image", action="append", default=[], help="image (P5/P6), may be repeated")
    p.add_argument("--clamps", action="append", default=[], help="clamp mask (P5) for the image at the same position")
    p.add_argument("--labelling", action="append", default=[], help="fully labelled training example (P5)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="grf-shape", description="Shape modelling with second order Gibbs random fields")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-prior", parents=[common], help="sample a labelling from the prior")
    p.add_argument("model")
    p.add_argument("-o", "--output")

    p = sub.add_parser("segment", parents=[common], help="max-marginal segmentation of an image")
    p.add_argument("model", help="model file with appearance")
    p.add_argument("image")
    p.add_argument("--clamps")
    p.add_argument("--confidence", help="write the per pixel confidence as image")
    p.add_argument("--plot", help="save a figure of the labelling and the confidence")
    p.add_argument("-o", "--output")

    p = sub.add_parser("learn", parents=[common], help="learn potentials from events or target statistics")
    p.add_argument("model", help="initial model")
    _evidence_args(p)
    p.add_argument("--target", help="statistics file, learn from statistics instead of events")
    p.add_argument("--learn-appearance", action="store_true", dest="learn_appearance")
    p.add_argument("--trace", help="csv file for the convergence trace")
    p.add_argument("--plot", help="save a figure of the convergence trace")
    p.add_argument("-o", "--output")

    p = sub.add_parser("learn-appearance", parents=[common], help="unsupervised appearance learning with a fixed prior")
    p.add_argument("model")
    p.add_argument("images", nargs="+")
    p.add_argument("--components", type=int)
    p.add_argument("--trace", help="csv file for the log-likelihood trace")
    p.add_argument("--plot", help="save a figure of the log-likelihood trace")
    p.add_argument("-o", "--output")

    p = sub.add_parser("structure", help="estimate the neighbourhood structure")
    ssub = p.add_subparsers(dest="variant", required=True)
    for variant in ("grow", "shrink"):
        sp = ssub.add_parser(variant, parents=[common])
        _evidence_args(sp)
        sp.add_argument("--labels", type=int, required=True, help="number of labels")
        sp.add_argument("--appearance", help="model file whose appearance is used for image events")
        sp.add_argument("--trace", help="csv file for the structure trace")
        sp.add_argument("--repeat", type=int, default=1, help="independent runs with the seeds seed, seed+1, ...")
        sp.add_argument("--histogram", help="save the histogram of the offsets selected over all runs")
        sp.add_argument("-o", "--output")

    p = sub.add_parser("compose", parents=[common], help="compose two models via mixed statistics")
    p.add_argument("model1")
    p.add_argument("stats1")
    p.add_argument("model2")
    p.add_argument("stats2")
    p.add_argument("--background1", type=int, default=0)
    p.add_argument("--background2", type=int, default=0)
    p.add_argument("--stats-output", dest="stats_output", help="write the mixed statistics")
    p.add_argument("-o", "--output")

    p = sub.add_parser("stats", help="sufficient statistics")
    ssub = p.add_subparsers(dest="variant", required=True)
    sp = ssub.add_parser("estimate", parents=[common], help="estimate prior or posterior statistics by sampling")
    sp.add_argument("model")
    sp.add_argument("--image")
    sp.add_argument("--clamps")
    sp.add_argument("-o", "--output")
    sp = ssub.add_parser("count", parents=[common], help="statistics of a labelling for the structure of a model")
    sp.add_argument("model")
    sp.add_argument("labelling")
    sp.add_argument("-o", "--output")

    p = sub.add_parser("oracle", help="exact inference on tiny domains")
    osub = p.add_subparsers(dest="variant", required=True)
    sp = osub.add_parser("z", parents=[common], help="partition function")
    sp.add_argument("model")
    for name in ("marginals", "gradient"):
        sp = osub.add_parser(name, parents=[common])
        sp.add_argument("model")
        sp.add_argument("--image")
        sp.add_argument("--clamps")
    sp = osub.add_parser("equal", parents=[common], help="exit 0 if both models define the same distribution, 1 otherwise")
    sp.add_argument("model1")
    sp.add_argument("model2")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp = osub.add_parser("rank", parents=[common], help="identifiability rank of the model's domain and structure")
    sp.add_argument("model")

    p = sub.add_parser("gen", help="synthetic models and images")
    gsub = p.add_subparsers(dest="variant", required=True)
    sp = gsub.add_parser("blobs", parents=[common], help="blob model on (1,0),(0,1),(1,1),(-1,1) and these offsets scaled by 5, the listed (0,-1) is read as a presumed typo for (1,0)",
                         description="Blob model with alpha on the short and alpha, beta on the long range edges. "
                                     "The short edges are sometimes listed as (0,1),(0,-1),(1,1),(-1,1). (0,1) and (0,-1) describe the same edge, "
                                     "the pair is taken as a presumed typo for (1,0),(0,1), the standard 8-neighbourhood.")
    sp.add_argument("--alpha", type=float, default=0.35)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--height", type=int, default=64)
    sp.add_argument("-o", "--output")
    sp = gsub.add_parser("figure", parents=[common], help="composite figure")
    sp.add_argument("--parts", type=int, default=7, help="number of labels including the background")
    sp.add_argument("--kind", choices=list(synthetic.FIGURES), default="man")
    sp.add_argument("--noise", type=float, default=0.1)
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--height", type=int, default=64)
    sp.add_argument("--truth", help="ground truth labelling")
    sp.add_argument("-o", "--output")
    sp = gsub.add_parser("collage", parents=[common], help="collage of two figure classes with identical appearance")
    sp.add_argument("--parts", type=int, default=7)
    sp.add_argument("--instances", type=int, nargs=2, default=[1, 1])
    sp.add_argument("--noise", type=float, default=0.1)
    sp.add_argument("--width", type=int, default=128)
    sp.add_argument("--height", type=int, default=128)
    sp.add_argument("--truth")
    sp.add_argument("-o", "--output")
    sp = gsub.add_parser("potts", parents=[common], help="Potts baseline")
    sp.add_argument("--labels", type=int, default=2)
    sp.add_argument("--anisotropic", action="store_true")
    sp.add_argument("--neighbourhood", type=int, choices=[4, 8], default=8)
    sp.add_argument("--strength", type=float, default=1.0)
    sp.add_argument("--strengths", type=float, nargs="+")
    sp.add_argument("--free", action="store_true", help="zero tables instead of Potts tables")
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--height", type=int, default=64)
    sp.add_argument("-o", "--output")
    sp = gsub.add_parser("cells", parents=[common], help="discs with bar artefacts")
    sp.add_argument("--size", type=int, default=96)
    sp.add_argument("--discs", type=int, default=6)
    sp.add_argument("--bars", type=int, default=4)
    sp.add_argument("--noise", type=float, default=0.15)
    sp.add_argument("--truth")
    sp.add_argument("-o", "--output")

    p = sub.add_parser("plot", parents=[common], help="plot a learning, appearance or structure trace")
    p.add_argument("trace", help="trace file (csv or pickle)")
    p.add_argument("--title", default="")
    p.add_argument("-o", "--output")

    p = sub.add_parser("loss", parents=[common], help="hamming loss and pixel accuracy of two labellings")
    p.add_argument("labelling")
    p.add_argument("reference")
    return parser


def _setting(args, key: str, setting: str):
    value = getattr(args, key, None)
    return settings[setting] if value is None else value


def _output(args, ext: str) -> str:
    if getattr(args, "output", None):
        return args.output
    return path.join(settings["datadir"], file_io.get_next_filename(settings["name"], settings["datadir"]) + ext)


def sampler_config(args) -> SamplerConfig:
    return SamplerConfig(burn_in=_setting(args, "burn_in", "burn_in"), n_samples=_setting(args, "samples", "n_samples"),
                         thinning=_setting(args, "thinning", "thinning"), seed=args.seed, scan=_setting(args, "scan", "scan"),
                         n_chains=_setting(args, "chains", "chains"))


def learning_schedule(args) -> LearningSchedule:
    overrides = dict(seed=args.seed, iterations=_setting(args, "iters", "iterations"), inner_sweeps=_setting(args, "sweeps", "inner_sweeps"),
                     scan=_setting(args, "scan", "scan"), chains=_setting(args, "chains", "chains"))
    if args.burn_in is not None:
        overrides["burn_in"] = args.burn_in
    if args.step0 is not None:
        overrides["step0"] = args.step0
    if args.tau is not None:
        overrides["tau"] = args.tau
    return LearningSchedule.from_settings(**overrides)


def _update_func(args):
    if args.monitor:
        return _Monitor(max_points_shown=None, use_print=True).update
    if args.verbose:
        return _update_print
    return None


def _provenance(args, **extra) -> dict:
    return {"command": " ".join(sys.argv[1:]), "seed": args.seed, **extra}


def _load_evidence(image: str | None, clamps: str | None, labels: LabelSet) -> Evidence:
    return Evidence(image=file_io.read_image(image) if image else None,
                    clamps=file_io.read_clamps(clamps, labels) if clamps else None)


def _events(args, labels: LabelSet) -> list:
    if args.clamps and len(args.clamps) != len(args.image):
        raise DimensionMismatch(f"{len(args.clamps)} clamp masks for {len(args.image)} images")
    events = [TrainingEvent.supervised(file_io.read_labelling(p, labels)) for p in args.labelling]
    for i, image in enumerate(args.image):
        events.append(TrainingEvent(_load_evidence(image, args.clamps[i] if args.clamps else None, labels)))
    if not events:
        raise DimensionMismatch("At least one --labelling or --image is required")
    return events


def _save_figure(fig, p: str):
    fig.savefig(p)
    plt.close(fig)
    print(f"Saved figure as '{p}'")


def _domain_of(events: list) -> GridDomain:
    e = events[0].evidence
    shape = e.clamps.shape if e.clamps is not None else e.image.shape[:2]
    return GridDomain(shape[1], shape[0])


def cmd_sample_prior(args) -> int:
    model = file_io.read_model(args.model).model
    config = sampler_config(args)
    chain = init_chain(model, config=config)
    sweeps = _setting(args, "sweeps", "burn_in")
    for _ in range(sweeps):
        chain.sweep()
    out = _output(args, ".pgm")
    file_io.write_labelling(out, chain.labelling)
    print(f"Saved as '{out}'")
    return 0


def cmd_segment(args) -> int:
    model_file = file_io.read_model(args.model)
    if model_file.appearance is None:
        raise MissingAppearance(f"'{args.model}' has no appearance model")
    clamps = file_io.read_clamps(args.clamps, model_file.model.labels) if args.clamps else None
    result = segment(model_file.model, model_file.appearance, file_io.read_image(args.image), clamps, sampler_config(args))
    out = _output(args, ".pgm")
    file_io.write_labelling(out, result.labelling)
    if args.confidence:
        file_io.write_image(args.confidence, result.confidence)
    if args.plot:
        _save_figure(plot_labelling(result.labelling, result.confidence, path.basename(args.image)), args.plot)
    print(f"Saved as '{out}'")
    return 0


def cmd_learn(args) -> int:
    model_file = file_io.read_model(args.model)
    model = model_file.model
    schedule = learning_schedule(args)
    if args.target:
        target, _ = file_io.read_statistics(args.target)
        result = learn_from_statistics(model, target, schedule, _update_func(args))
    else:
        events = _events(args, model.labels)
        appearance = model_file.appearance
        if appearance is None and any(e.evidence.image is not None for e in events):
            raise MissingAppearance(f"Image events need an appearance model, '{args.model}' has none")
        result = learn_potentials(model, events, appearance, schedule, _update_func(args), args.learn_appearance)
    out = _output(args, ".json")
    file_io.write_model(out, result.model, result.appearance or model_file.appearance, _provenance(args, schedule=asdict(schedule)))
    _write_trace(args, result.trace)
    print(f"Saved as '{out}'")
    return 0


def _write_trace(args, trace):
    if args.trace:
        save_dataframe(trace, args.trace)
    if args.plot:
        _save_figure(plot_trace(trace, path.basename(args.model)), args.plot)


def cmd_learn_appearance(args) -> int:
    model_file = file_io.read_model(args.model)
    model = model_file.model
    images = [file_io.read_image(p) for p in args.images]
    appearance = model_file.appearance
    if appearance is None:
        components = args.components or settings["components_per_label"]
        appearance = init_appearance(images[0], model.labels, components, args.seed)
    schedule = learning_schedule(args)
    events = [TrainingEvent(Evidence(image=image)) for image in images]
    result = learn_appearance(model, appearance, events, schedule, _update_func(args))
    out = _output(args, ".json")
    file_io.write_model(out, model, result.appearance, _provenance(args, schedule=asdict(schedule)))
    _write_trace(args, result.trace)
    print(f"Saved as '{out}'")
    return 0


def cmd_structure(args) -> int:
    labels = LabelSet(args.labels)
    events = _events(args, labels)
    appearance = file_io.read_model(args.appearance).appearance if args.appearance else None
    candidate_range = CandidateRange(_setting(args, "d", "d"))
    target_size = args.target_size if args.target_size is not None else len(candidate_range) // 10
    if args.repeat < 1:
        raise ValueError(f"--repeat must be >= 1, got {args.repeat}")
    schedule = learning_schedule(args)
    config = sampler_config(args)
    update_func = _update_func(args)
    runs = []
    for r in range(args.repeat):
        run_schedule, run_config = replace(schedule, seed=schedule.seed + r), replace(config, seed=config.seed + r)
        if args.variant == "grow":
            model, trace = grow_structure(events, labels, _domain_of(events), candidate_range, target_size, run_schedule, appearance,
                                          _setting(args, "metric", "metric"), run_config, update_func=update_func)
        else:
            model, trace = shrink_structure(events, labels, _domain_of(events), candidate_range, target_size, run_schedule, appearance, update_func=update_func)
        print(f"Structure (seed {run_schedule.seed}): {' '.join(str(a) for a in model.structure.nonzero)}")
        runs.append((model, trace))
    # model and trace of the first run
    model, trace = runs[0]
    out = _output(args, ".json")
    file_io.write_model(out, model, appearance, _provenance(args, schedule=asdict(schedule), variant=args.variant))
    if args.trace:
        save_dataframe(trace.to_dataframe(), args.trace)
    if args.histogram:
        hist = structure_histogram([m.structure for m, _ in runs], candidate_range.d)
        _save_figure(plot_structure_histogram(hist, f"{args.variant}, {args.repeat} runs"), args.histogram)
    print(f"Saved as '{out}'")
    return 0


def cmd_compose(args) -> int:
    f1, f2 = file_io.read_model(args.model1), file_io.read_model(args.model2)
    stats1, _ = file_io.read_statistics(args.stats1)
    stats2, _ = file_io.read_statistics(args.stats2)
    mapping = LabelMapping.joint(f1.model.labels.count, f2.model.labels.count, args.background1, args.background2)
    if args.w0 is None and args.w1 is None and args.w2 is None:
        w = MixtureWeights.default(mapping.n_joint)
    else:
        default = MixtureWeights.default(mapping.n_joint)
        w = MixtureWeights(args.w0 or default.w0, args.w1 or default.w1, args.w2 or default.w2)
    schedule = learning_schedule(args)
    result = compose_models(f1.model, stats1, f2.model, stats2, w, schedule, args.background1, args.background2, sampler_config(args), _update_func(args))
    appearance = None
    if f1.appearance is not None and f2.appearance is not None:
        appearance = compose_appearance(f1.appearance, f2.appearance, result.mapping)
    out = _output(args, ".json")
    file_io.write_model(out, result.model, appearance, _provenance(args, weights=asdict(w), schedule=asdict(schedule)))
    if args.stats_output:
        file_io.write_statistics(args.stats_output, result.statistics, _provenance(args))
    print(f"Saved as '{out}'")
    return 0


def cmd_stats(args) -> int:
    model_file = file_io.read_model(args.model)
    model = model_file.model
    if args.variant == "count":
        stats = count_statistics(model.domain, model.structure, model.labels, file_io.read_labelling(args.labelling, model.labels))
    else:
        evidence = None
        if args.image or args.clamps:
            evidence = _load_evidence(args.image, args.clamps, model.labels)
        stats = estimate_statistics(model, evidence, model_file.appearance, sampler_config(args))
    out = _output(args, ".json")
    file_io.write_statistics(out, stats, _provenance(args))
    print(f"Saved as '{out}'")
    return 0


def cmd_oracle(args) -> int:
    if args.variant == "equal":
        m1, m2 = file_io.read_model(args.model1).model, file_io.read_model(args.model2).model
        equal = oracle.distributions_equal(m1, m2, args.tol)
        print("equal" if equal else "not equal")
        return 0 if equal else EXIT_NOT_EQUAL
    model_file = file_io.read_model(args.model)
    model = model_file.model
    if args.variant == "z":
        log_z = oracle.partition_function(model)
        print(f"log Z = {log_z!r}\nZ = {np.exp(log_z)!r}")
    elif args.variant == "rank":
        rank, identifiable = oracle.gauge_rank(model.domain, model.structure)
        print(f"rank = {rank}, {'identifiable' if identifiable else 'not identifiable'} up to constants")
    else:
        evidence = None
        if args.image or args.clamps:
            evidence = _load_evidence(args.image, args.clamps, model.labels)
        if args.variant == "marginals":
            marginals = oracle.exact_marginals(model, evidence, model_file.appearance)
            for y in range(model.domain.height):
                for x in range(model.domain.width):
                    print(f"({x},{y}): " + " ".join(f"{p:.6f}" for p in marginals[y, x]))
        else:
            if evidence is None:
                raise DimensionMismatch("oracle gradient needs --image or --clamps")
            gradient = oracle.exact_loglik_gradient(model, evidence, model_file.appearance)
            for a in gradient.offsets:
                print(f"{a}: {np.array2string(gradient.table(a), precision=6)}")
    return 0


def cmd_gen(args) -> int:
    if args.variant in ("blobs", "potts"):
        domain = GridDomain(args.width, args.height)
        if args.variant == "blobs":
            model = synthetic.gen_blob_model(args.alpha, args.beta, domain)
        else:
            model = synthetic.gen_potts_baseline(LabelSet(args.labels), args.anisotropic, args.neighbourhood, args.strength,
                                                 tuple(args.strengths) if args.strengths else None, args.free, domain)
        out = _output(args, ".json")
        file_io.write_model(out, model, provenance=_provenance(args))
        print(f"Saved as '{out}'")
        return 0
    if args.variant == "figure":
        image, truth = synthetic.gen_composite_figure(args.parts, args.noise, args.seed, (args.width, args.height), args.kind)
    elif args.variant == "collage":
        image, truth = synthetic.gen_collage(instances=tuple(args.instances), size=(args.width, args.height), parts=args.parts, noise=args.noise, seed=args.seed)
    else:
        image, truth = synthetic.gen_cells(args.size, args.discs, args.bars, noise=args.noise, seed=args.seed)
    out = _output(args, ".pgm")
    file_io.write_image(out, image)
    if args.truth:
        file_io.write_labelling(args.truth, truth)
    print(f"Saved as '{out}'")
    return 0


def cmd_plot(args) -> int:
    fig = plot_trace(args.trace, args.title or path.basename(args.trace))
    out = args.output or path.splitext(args.trace)[0] + ".png"
    _save_figure(fig, out)
    return 0


def cmd_loss(args) -> int:
    y, reference = file_io.read_labelling(args.labelling), file_io.read_labelling(args.reference)
    print(f"hamming = {hamming_loss(y, reference)}\naccuracy = {pixel_accuracy(y, reference):.6f}")
    return 0


COMMANDS = {
    "sample-prior": cmd_sample_prior,
    "segment": cmd_segment,
    "learn": cmd_learn,
    "learn-appearance": cmd_learn_appearance,
    "structure": cmd_structure,
    "compose": cmd_compose,
    "stats": cmd_stats,
    "oracle": cmd_oracle,
    "gen": cmd_gen,
    "plot": cmd_plot,
    "loss": cmd_loss,
}


def init(args):
    """Configure logging and load the settings from the config search path or --config"""
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    _settings.config_path = args.config or find_config_path()
    if path.isfile(_settings.config_path):
        load_settings(_settings.config_path)
    if args.threads and args.threads > 1:
        log.debug(f"init: running with up to {args.threads} threads")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    init(args)
    try:
        return COMMANDS[args.command](args)
    except ValueError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (GrfError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print("Cancelled" + " "*50, file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
