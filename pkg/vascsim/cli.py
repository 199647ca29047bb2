import logging
import os
from pathlib import Path
from typing import List, Optional, Tuple

import click

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass  # python-dotenv not installed

from .core.exceptions import VascSimException
from .core.types import DiseaseKind, Method, RunConfig
from .experiment import Experiment
from .features import FULL_COMBINATION, parse_combinations
from .io.importer import export_cohort_table, import_vpd, load_descriptor
from .io.records import load_config, read_cohort

# Set up logging
logging.basicConfig(
    level=os.getenv("VASCSIM_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).parent / "configs" / "desk_scale.yml"
DISEASE_CHOICES = ["cas", "sas", "pad", "aaa", "aaa-l"]
# Shared with click's own usage errors (unknown options, bad choices).
EXIT_PARTIAL = 2

# Column headers for the argmax row of each grid
GRID_HEADERS = {
    "n_trees": "Trees",
    "max_depth": "Depth",
    "neurons_per_layer": "Neurons",
    "n_hidden_layers": "Layers",
}


def config_options(func):
    """Options shared by every command that runs against a configuration"""
    func = click.option('--out', '-o', help='Output directory (overrides config output_dir)')(func)
    func = click.option('--jobs', '-j', type=int, help='Worker count (default: all cores)')(func)
    func = click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), help='Master seed')(func)
    func = click.option('--config', '-c', type=click.Path(exists=True, dir_okay=False),
                        help='Run configuration (YAML or JSON)')(func)
    return func


def build_config(config: Optional[str], seed: Optional[int], jobs: Optional[int],
                 out: Optional[str], methods: Optional[str] = None) -> RunConfig:
    """Packaged desk-scale defaults, then the config file, then command-line flags"""
    run_config = load_config(config or DEFAULT_CONFIG)
    data = run_config.to_dict()
    if seed is not None:
        data["seed"] = seed
    if jobs is not None:
        data["jobs"] = jobs
    if out is not None:
        data["output_dir"] = out
    if methods is not None:
        data["methods"] = [m.value for m in Method.parse_list(methods)]
    return RunConfig.from_dict(data)


def parse_diseases(values: Tuple[str, ...]) -> Optional[List[DiseaseKind]]:
    return [DiseaseKind.parse(v) for v in values] if values else None


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
def cli(verbose):
    """vascsim: virtual-patient arterial disease classification

    Get started:
    1. vascsim generate --seed 7          # simulate VPD_H and diseased twins
    2. vascsim sweep --methods gb         # 63-combination search per disease
    3. vascsim summarize --disease aaa    # measurement-count and Q1 tables
    """
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@cli.command()
@config_options
@click.option('--disease', '-d', multiple=True, type=click.Choice(DISEASE_CHOICES, case_sensitive=False),
              help='Diseased cohorts to generate (default: all with a non-zero count)')
@click.option('--subjects', '-n', type=click.IntRange(min=2), help='Subjects per cohort (overrides config)')
def generate(config, seed, jobs, out, disease, subjects):
    """Simulate the healthy cohort and its diseased twins"""
    try:
        run_config = build_config(config, seed, jobs, out)
        diseases = parse_diseases(disease)
        if subjects is not None:
            run_config.population.healthy = subjects
            for kind in DiseaseKind:
                current = run_config.population.count(kind)
                chosen = diseases is None or kind in diseases
                run_config.population.diseases[kind.value] = subjects if chosen else min(current, subjects)
            run_config.validate()

        experiment = Experiment(run_config, progress=True)
        written = experiment.generate(diseases)
        for cohort, path in written.items():
            click.echo(f"✅ {cohort.value}: {path}")
    except VascSimException as e:
        click.echo(f"❌ Generation failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command('import-vpd')
@click.argument('table', type=click.Path(exists=True, dir_okay=False))
@click.option('--descriptor', '-m', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Column-mapping descriptor (YAML or JSON)')
@click.option('--output', '-o', help='Output JSONL file (default: VPD_<cohort>.jsonl beside the table)')
@click.option('--skip-invalid', is_flag=True, help='Write valid rows and report the rest')
def import_vpd_cmd(table, descriptor, output, skip_invalid):
    """Convert an external waveform or coefficient table into a cohort file"""
    try:
        mapping = load_descriptor(descriptor)
        output = output or str(Path(table).parent / mapping.cohort.filename)
        result = import_vpd(table, mapping, out_path=output, skip_invalid=skip_invalid)
        for problem in result.problems:
            click.echo(f"⚠️  {problem}", err=True)
        click.echo(f"✅ Imported {len(result.records)} records to {output}")
    except VascSimException as e:
        click.echo(f"❌ Import failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command('export-table')
@click.argument('cohort_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--table', '-t', required=True, help='Output CSV path')
@click.option('--descriptor', '-m', help='Descriptor output path (default: <table>.descriptor.yml)')
def export_table(cohort_file, table, descriptor):
    """Write a cohort as a coefficient table that import-vpd reads back losslessly"""
    try:
        records = read_cohort(cohort_file)
        descriptor = descriptor or str(Path(table).with_suffix(".descriptor.yml"))
        export_cohort_table(records, table, descriptor)
        click.echo(f"✅ Exported {len(records)} records to {table}")
        click.echo(f"📄 Descriptor: {descriptor}")
    except VascSimException as e:
        click.echo(f"❌ Export failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command()
@config_options
@click.option('--method', required=True, type=click.Choice(["rf", "gb", "mlp", "nb", "lr", "svm"],
                                                            case_sensitive=False))
@click.option('--disease', '-d', required=True, type=click.Choice(DISEASE_CHOICES, case_sensitive=False))
@click.option('--combos', default=None,
              help="'all' or a comma list such as q1,q1+p1; one grid per combination (default: all six)")
def gridsearch(config, seed, jobs, out, method, disease, combos):
    """Search the architecture grid of RF, GB or MLP"""
    try:
        run_config = build_config(config, seed, jobs, out)
        experiment = Experiment(run_config, progress=True)
        kind = DiseaseKind.parse(disease)
        combinations = parse_combinations(combos) if combos else [FULL_COMBINATION]
        for combination in combinations:
            result = experiment.grid_search(Method(method.upper()), kind, combination)

            params = [c for c in result.table.columns if c in GRID_HEADERS]
            best = result.best.params.to_dict()
            header = "  ".join(f"{GRID_HEADERS[p]:>8}" for p in params) + f"  {'F1':>8}"
            row = "  ".join(f"{best[p]:>8}" for p in params) + f"  {result.best_score:>8.4f}"
            click.echo(f"🏆 Best {method.upper()} architecture for {kind.value} on {combination.label} "
                       f"({len(result.table)} cells)")
            click.echo(header)
            click.echo(row)
    except VascSimException as e:
        click.echo(f"❌ Grid search failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command()
@config_options
@click.option('--disease', '-d', multiple=True, type=click.Choice(DISEASE_CHOICES, case_sensitive=False),
              help='Diseases to sweep (default: every generated cohort in the config)')
@click.option('--methods', help="'all' or a comma list such as gb,rf")
@click.option('--combos', help="'all' or a comma list such as q1,q1+p1")
@click.pass_context
def sweep(ctx, config, seed, jobs, out, disease, methods, combos):
    """Run the combination search and export every report table"""
    try:
        run_config = build_config(config, seed, jobs, out, methods)
        experiment = Experiment(run_config, progress=True)
        combinations = parse_combinations(combos) if combos else None
        outcome = experiment.sweep(parse_diseases(disease), combinations=combinations)
    except VascSimException as e:
        click.echo(f"❌ Sweep failed: {e}", err=True)
        raise click.ClickException(str(e))

    if outcome.skipped:
        click.echo("✅ Sweep outputs already up to date")
    else:
        click.echo(f"✅ Wrote {len(outcome.outputs)} files to {experiment.report_dir}")
    if outcome.n_flagged:
        click.echo(f"⚠️  {outcome.n_flagged} cells were flagged; see the *_folds.csv error column", err=True)
        ctx.exit(EXIT_PARTIAL)


@cli.command()
@config_options
@click.option('--disease', '-d', required=True, type=click.Choice(DISEASE_CHOICES, case_sensitive=False))
def summarize(config, seed, jobs, out, disease):
    """Measurement-count summary, best combinations and Q1 histograms from a sweep"""
    try:
        experiment = Experiment(build_config(config, seed, jobs, out))
        for path in experiment.write_summaries(DiseaseKind.parse(disease)):
            click.echo(f"📊 {path}")
    except VascSimException as e:
        click.echo(f"❌ Summary failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command('ratio-study')
@config_options
def ratio_study(config, seed, jobs, out):
    """GB F1 ratio of the low-severity aneurysm cohort to the standard one"""
    try:
        experiment = Experiment(build_config(config, seed, jobs, out))
        path = experiment.write_ratio_study()
        click.echo(f"📊 {path}")
    except VascSimException as e:
        click.echo(f"❌ Ratio study failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command()
@config_options
@click.option('--disease', '-d', default="aaa", type=click.Choice(DISEASE_CHOICES, case_sensitive=False))
def unilateral(config, seed, jobs, out, disease):
    """GB sensitivity/specificity from right, left and both sides of Q1 and P3"""
    try:
        experiment = Experiment(build_config(config, seed, jobs, out))
        table = experiment.unilateral(DiseaseKind.parse(disease))
        click.echo(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    except VascSimException as e:
        click.echo(f"❌ Unilateral study failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command()
@config_options
@click.option('--disease', '-d', required=True, type=click.Choice(DISEASE_CHOICES, case_sensitive=False))
def importance(config, seed, jobs, out, disease):
    """Share of GB split improvement per measurement"""
    try:
        experiment = Experiment(build_config(config, seed, jobs, out))
        table = experiment.importance(DiseaseKind.parse(disease))
        for _, row in table.iterrows():
            click.echo(f"{row['measurement']}: {row['percent']:.2f}%")
    except VascSimException as e:
        click.echo(f"❌ Importance study failed: {e}", err=True)
        raise click.ClickException(str(e))


@cli.command()
@click.option('--config', '-c', type=click.Path(exists=True, dir_okay=False),
              help='Path to config file to validate')
@click.option('--cohort', type=click.Path(exists=True, dir_okay=False),
              help='Path to cohort JSONL file to validate')
def validate(config, cohort):
    """Validate configuration or cohort files"""
    if not config and not cohort:
        raise click.ClickException("Give --config and/or --cohort")
    try:
        if config:
            run_config = load_config(config)
            click.echo(f"✅ Configuration valid (seed {run_config.seed})")
        if cohort:
            records = read_cohort(cohort)
            tags = sorted({r.cohort.value for r in records})
            click.echo(f"✅ Cohort valid: {len(records)} records, tags {tags}")
    except VascSimException as e:
        click.echo(f"❌ Validation failed: {e}", err=True)
        raise click.ClickException(str(e))


if __name__ == '__main__':
    cli()
