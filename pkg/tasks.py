"""Tasks for use with Invoke."""

from invoke import Collection, task as invoke_task


# Defaults may be overridden in invoke.yml or with INVOKE_MOLLIFY_<key> environment variables
namespace = Collection("mollify")
namespace.configure(
    {
        "mollify": {
            "package": "mollify",
            "docs_dir": "docs",
            "output_dir": "out",
        }
    }
)


def task(function=None, *args, **kwargs):
    """Task decorator to override the default Invoke task decorator and add each task to the invoke namespace."""

    def task_wrapper(function=None):
        """Wrapper around invoke.task to add the task to the namespace as well."""
        if args or kwargs:
            task_func = invoke_task(*args, **kwargs)(function)
        else:
            task_func = invoke_task(function)
        namespace.add_task(task_func)
        return task_func

    if function:
        return task_wrapper(function)
    return task_wrapper


def run_command(context, command, **kwargs):
    """Run command inside the project's Poetry environment."""
    return context.run(f"poetry run {command}", **kwargs)


# ------------------------------------------------------------------------------
# BUILD
# ------------------------------------------------------------------------------
@task
def build(context):
    """Build the sdist and wheel under dist/."""
    context.run("poetry build")


@task
def sphinx(context):
    """Serve the documentation with live reload."""
    docs = context.mollify.docs_dir
    run_command(context, f"sphinx-autobuild {docs} {docs}/_build/html")


# ------------------------------------------------------------------------------
# EXPERIMENTS
# ------------------------------------------------------------------------------
@task(help={"config": "experiment YAML file", "verbose": "log at DEBUG level"})
def run(context, config, verbose=False):
    """Run one experiment from a config file."""
    flags = "-v " if verbose else ""
    run_command(context, f"mollify {flags}run {config}")


@task(help={"seeds": "comma separated master seeds"})
def auc_demo(context, seeds="0"):
    """Run the synthetic AUC demonstration and keep its traces."""
    seed_args = ",".join(s.strip() for s in seeds.split(","))
    output = f"{context.mollify.output_dir}/auc_demo"
    run_command(context, f"mollify auc-demo --seeds {seed_args} --output {output}")


@task(help={"objective": "registered objective name"})
def oracle_check(context, objective="step"):
    """Compare the Monte-Carlo gradients of one objective with quadrature."""
    run_command(context, f"mollify oracle-check --objective {objective}")


# ------------------------------------------------------------------------------
# TESTS
# ------------------------------------------------------------------------------
LINTERS = {
    "black": "black --check --diff .",
    "flake8": "flake8 .",
    "bandit": "bandit --recursive . --configfile .bandit.yml",
    "pydocstyle": "pydocstyle --config=.pydocstyle.ini .",
    "pylint": "pylint --rcfile pyproject.toml {package}",
    "yamllint": "yamllint . --format standard",
}


def lint(context, name):
    """Run the linter called name from LINTERS."""
    print(f"Running {name}...")
    run_command(context, LINTERS[name].format(package=context.mollify.package))


@task(help={"autoformat": "reformat the files instead of reporting the differences"})
def black(context, autoformat=False):
    """Check Python code style with Black."""
    if autoformat:
        run_command(context, "black .")
    else:
        lint(context, "black")


@task
def flake8(context):
    """Check for PEP8 compliance and other style issues."""
    lint(context, "flake8")


@task
def pylint(context):
    """Run pylint code analysis."""
    lint(context, "pylint")


@task
def pydocstyle(context):
    """Check docstring formatting."""
    lint(context, "pydocstyle")


@task
def bandit(context):
    """Run bandit static security analysis."""
    lint(context, "bandit")


@task
def yamllint(context):
    """Check the formatting of the YAML files."""
    lint(context, "yamllint")


@task(
    help={
        "label": "test module or directory to run instead of the whole suite",
        "failfast": "stop at the first failing test",
        "fast": "skip the long experiments marked slow",
        "verbose": "show the name of every test",
    }
)
def unittest(context, label="mollify", failfast=False, fast=False, verbose=False):
    """Run the unit tests under coverage."""
    command = f"coverage run --source {context.mollify.package} --module pytest {label}"
    if failfast:
        command += " --exitfirst"
    if fast:
        command += ' -m "not slow"'
    if not verbose:
        command += " --quiet"
    run_command(context, command)


@task
def unittest_coverage(context):
    """Report the coverage measured by 'invoke unittest'."""
    run_command(context, f"coverage report --skip-covered --include '{context.mollify.package}/*'")


@task(help={"failfast": "stop at the first failing test", "fast": "skip the long experiments marked slow"})
def tests(context, failfast=False, fast=False):
    """Run every linter, then the unit tests, then report coverage."""
    for name in LINTERS:
        lint(context, name)
    print("Running unit tests...")
    unittest(context, failfast=failfast, fast=fast)
    print("All tests have passed!")
    unittest_coverage(context)
