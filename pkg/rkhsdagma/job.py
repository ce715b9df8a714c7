import logging
import shlex
import subprocess
import sys
import time
from collections import OrderedDict
from dataclasses import fields
from pathlib import Path
import typing
from warnings import warn

import yaml
from jinja2 import Template

from .acyclicity import DirectedGraph
from .errors import ConfigError, NonFiniteError, OptimizationError
from .io import write_data_csv, write_edge_list, write_json, write_matrix_csv, read_json
from .metrics import shd, count_accuracy
from .optimizer import DagmaConfig, rkhs_dagma
from .sem_sim import SemSpec, simulate_sem

logger = logging.getLogger(__name__)


def get_slurm_template():
    return Path(__file__).parent.parent / "templates" / "slurm_template.jinja"


class KeyDict(OrderedDict):
    """Ordered level -> value mapping identifying one replicate of a campaign."""

    def __repr__(self):
        return "{" + ", ".join(["{}: {}".format(key, val) for key, val in self.items()]) + "}"

    def __hash__(self):
        return hash(tuple(sorted(self.items())))

    def __lt__(self, other):
        if self == other:
            return False
        for key1, key2 in zip(self.keys(), other.keys()):
            if key1 != key2:
                return key1 < key2
        for val1, val2 in zip(self.values(), other.values()):
            if val1 != val2:
                return val1 < val2
        return len(self) < len(other)

    def __gt__(self, other):
        return other < self

    def to_json(self):
        return [(key, val) for key, val in self.items()]


class Job:
    """
     One replicate of the structure-learning protocol: simulate a SEM, run RKHS-DAGMA on it,
     and score the result against the true DAG. Every job owns a directory under
     config["paths"]["output"].
    """

    def __init__(self, config: dict, id_key: KeyDict, verbose=False):
        self.config: dict = config
        self.verbose: bool = verbose
        self.id_key: KeyDict = id_key
        self.name: str = Job.make_name(id_key)
        self.slurm_id: typing.Optional[int] = None

        self.output_dir: typing.Optional[Path] = None
        self.file_name_slurm: typing.Optional[Path] = None
        self.file_name_log: typing.Optional[Path] = None
        self.set_file_names()

    @staticmethod
    def make_name(id_key: KeyDict):
        if not len(id_key):
            return "job"
        return "_".join("{}-{}".format(key, val) for key, val in id_key.items())

    def set_file_names(self):
        paths = self.config["paths"]
        self.output_dir = Path(paths["output"]) / self.name
        self.file_name_slurm = (Path(paths["slurm"]) / self.name).with_suffix(".sh")
        self.file_name_log = (Path(paths["log"]) / self.name).with_suffix(".log")

        for key, path in [("output", self.output_dir), ("slurm", self.file_name_slurm.parent),
                          ("log", self.file_name_log.parent)]:
            try:
                path.mkdir(parents=True, exist_ok=True)
            except PermissionError:
                raise PermissionError("The path specified in your configuration file in ['paths']['{}'] "
                                      "(i.e., {}) does not exist and could not be created.".format(key, path))

    @property
    def id_key(self):
        return self._id_key

    @id_key.setter
    def id_key(self, id_key: KeyDict):
        if not isinstance(id_key, KeyDict):
            raise TypeError("id_key must be of type KeyDict.")
        self._id_key = id_key

    @property
    def file_name_result(self):
        return self.output_dir / "result.json"

    @property
    def file_name_spec(self):
        return self.output_dir / "job.yaml"

    @property
    def is_done(self):
        return self.file_name_result.exists()

    def to_json(self):
        return {"name": self.name, "key": self.id_key.to_json(), "slurm_id": self.slurm_id}

    def __repr__(self):
        return str(self.to_json())

    def sem_spec(self):
        """Simulation settings: the 'simulation' section overridden by the levels of the job key."""
        values = dict(self.config.get("simulation", {}) or {})
        spec_fields = {f.name for f in fields(SemSpec)}
        for key, val in self.id_key.items():
            if key not in spec_fields:
                raise ConfigError("['analysis']['{}'] is not a simulation setting. Valid levels are {}."
                                  .format(key, sorted(spec_fields)))
            values[key] = val
        return SemSpec(**{key: val for key, val in values.items() if key in spec_fields})

    def run(self, threads=None):
        spec = self.sem_spec()
        cfg = DagmaConfig.from_config(self.config)
        logger.info("Running job %s.", self.name)

        start = time.perf_counter()
        data = simulate_sem(spec)
        write_data_csv(self.output_dir / "data.csv", data.X)
        write_edge_list(self.output_dir / "truth_dag.csv", data.dag)

        result = {"name": self.name, "key": dict(self.id_key), "spec": spec.to_json(),
                  "true_edges": data.dag.n_edges,
                  "baseline_shd": shd(DirectedGraph.empty(spec.d), data.dag).shd}
        try:
            fit = rkhs_dagma(data.X, cfg, threads)
        except (OptimizationError, NonFiniteError) as e:
            warn("Job {} failed: {}".format(self.name, e))
            result.update(status="failed", error=str(e), runtime=time.perf_counter() - start)
            write_json(self.file_name_result, result)
            return result

        write_matrix_csv(self.output_dir / "W_raw.csv", fit.W_raw)
        write_edge_list(self.output_dir / "graph.csv", fit.graph)
        write_json(self.output_dir / "trace.json", fit.to_json())
        result.update(status="done", is_dag=fit.is_dag_flag, runtime=time.perf_counter() - start,
                      **shd(fit.graph, data.dag).to_json(),
                      **{key: val for key, val in count_accuracy(fit.graph, data.dag).items()
                         if key in ("fdr", "tpr", "fpr")})
        write_json(self.file_name_result, result)
        return result

    @property
    def result(self):
        if not self.is_done:
            return None
        return read_json(self.file_name_result)

    def write_spec(self):
        with self.file_name_spec.open("w") as f:
            yaml.safe_dump({"key": dict(self.id_key), "config": self.config}, f, default_flow_style=False)
        return self.file_name_spec

    @classmethod
    def from_spec(cls, file_name, verbose=False):
        with Path(file_name).open("r") as f:
            content = yaml.safe_load(f)
        return cls(content["config"], KeyDict(content["key"]), verbose=verbose)

    def get_command(self):
        return "{} -m rkhsdagma run-job {}".format(shlex.quote(sys.executable),
                                                   shlex.quote(str(self.write_spec().resolve())))

    def generate_batch_script(self, template_path=None):
        slurm = self.config.get("slurm", {}) or {}
        if not slurm.get("account"):
            warn("No SLURM account is set in ['slurm']['account']; the cluster default will be used.")
        kwargs = {"job_name": self.name,
                  "account": slurm.get("account", ""),
                  "email": slurm.get("email", ""),
                  "send_emails": slurm.get("send_emails", False),
                  "time": slurm.get("time", "01:00:00"),
                  "mem": slurm.get("mem", "8G"),
                  "cpus": slurm.get("cpus", 1),
                  "venv_path": slurm.get("venv", ""),
                  "file_name_log": str(self.file_name_log),
                  "command": self.get_command()}

        if template_path is None:
            template_path = get_slurm_template()
        with Path(template_path).open("r") as file_jinja:
            slurm_script = Template(file_jinja.read()).render(**kwargs)
        with self.file_name_slurm.open("w") as file_slurm:
            file_slurm.write(slurm_script)
        return self.file_name_slurm

    def submit(self, test=False):
        args = ["sbatch", str(self.generate_batch_script())]
        if test:
            print(" ".join(args))
            self.slurm_id = 99999999
            return self.slurm_id

        res = subprocess.check_output(args).strip()
        if self.verbose:
            print(res.decode(), file=sys.stdout)
        if not res.startswith(b"Submitted batch"):
            warn("There has been an error launching the job {}.".format(self.name))
            return None
        self.slurm_id = int(res.split()[-1])
        return self.slurm_id

    def cancel(self):
        if self.slurm_id is not None:
            subprocess.check_output(["scancel", str(self.slurm_id)])
