import logging
import os
import pickle
from itertools import product
from pathlib import Path
import typing
from warnings import warn

import pandas as pd

from .config import ConfigArg, load_config
from .job import Job, KeyDict
from .utils import parallel_map

logger = logging.getLogger(__name__)


class Campaign:
    """
     Structure-learning experiments over the grid of settings listed in config["analysis"]
     (e.g. mechanism x d x seed), one Job per combination.
    """

    def __init__(self,
                 config: ConfigArg = None,
                 name: str = "campaign",
                 path: typing.Optional[str] = None,
                 resume: bool = True,
                 verbose: bool = False,
                 use_user_config: bool = True):

        self.resume: bool = resume
        self.verbose: bool = verbose
        self.name: str = name

        if path is None:
            path = os.getcwd()
        self.path: Path = Path(path)
        self._file_name: typing.Optional[Path] = None

        self.config: dict = load_config(config, use_user_config=use_user_config)
        # relative output paths live under the campaign directory
        self.config["paths"] = {key: str(self.path / val) for key, val in self.config["paths"].items()}
        self._jobs: typing.Dict[KeyDict, Job] = {}
        self.ready_jobs()

    @property
    def file_name(self):
        if self._file_name is None:
            return (self.path / self.name).with_suffix(".cpg")
        return self._file_name

    @file_name.setter
    def file_name(self, file_name):
        self._file_name = Path(file_name)

    def to_json(self):
        return {"name": self.name,
                "resume": self.resume,
                "jobs": [job.name for job in self.jobs]}

    def __repr__(self):
        return str(self.to_json())

    def __str__(self):
        return "Campaign {name} (resume={resume}) of {nb_jobs} jobs over the levels {levels}.".format(
            name=self.name, resume=self.resume, nb_jobs=len(self._jobs),
            levels=list(self.config["analysis"].keys()))

    def job_keys(self):
        analysis = self.config["analysis"] or {}
        property_names = sorted(analysis)
        if not property_names:
            return [KeyDict()]
        return [KeyDict(zip(property_names, values))
                for values in product(*[analysis[name] for name in property_names])]

    def ready_jobs(self):
        self._jobs = {job_key: Job(self.config, job_key, verbose=self.verbose) for job_key in self.job_keys()}

    @property
    def jobs(self):
        return [self._jobs[key] for key in sorted(self._jobs)]

    def get_job(self, name):
        for job in self._jobs.values():
            if job.name == name:
                return job
        raise ValueError("Job {} not found in the campaign.".format(name))

    def run(self, local=True, test=False, threads=None):
        """
        :param local: Run the jobs in this process (in parallel over jobs) or submit one SLURM
                      batch script per job.
        :param test: With local=False, print the sbatch commands instead of running them.
        """
        jobs = self.jobs
        if self.resume:
            done = [job.name for job in jobs if job.is_done]
            if done:
                logger.info("Skipping %d completed job(s): %s", len(done), ", ".join(done))
            jobs = [job for job in jobs if not job.is_done]

        if not local:
            return [job.submit(test=test) for job in jobs]
        return parallel_map(lambda job: job.run(threads=1), jobs, threads)

    def cancel(self):
        for job in self.jobs:
            job.cancel()

    def summary(self):
        """
        :return: (per-job DataFrame, DataFrame of medians grouped by the levels other than seed)
        """
        records = []
        for job in self.jobs:
            result = job.result
            if result is None:
                records.append(dict(job.id_key, status="pending"))
                continue
            record = dict(job.id_key)
            record.update({key: result.get(key) for key in ["status", "shd", "extra", "missing", "reversed",
                                                            "predicted_edges", "true_edges", "baseline_shd",
                                                            "is_dag", "runtime"]})
            records.append(record)
        table = pd.DataFrame(records)

        done = table[table["status"] == "done"] if "status" in table else table.iloc[:0]
        group_by = [level for level in self.config["analysis"] if level != "seed"]
        columns = ["shd", "baseline_shd", "predicted_edges", "true_edges", "runtime"]
        if done.empty:
            medians = pd.DataFrame(columns=group_by + columns)
        elif group_by:
            medians = done.groupby(group_by)[columns].median().reset_index()
        else:
            medians = done[columns].median().to_frame().T
        return table, medians

    def save(self, file_name=None):
        if file_name is not None:
            self.file_name = file_name
        with self.file_name.open("wb") as f:
            pickle.dump(self, f)
        logger.info("Saving campaign as %s.", self.file_name)

    def load(self, file_name=None):
        if file_name is not None:
            self.file_name = file_name
        with self.file_name.open("rb") as f:
            loaded_campaign: Campaign = pickle.load(f)

        self.resume = loaded_campaign.resume
        self.verbose = loaded_campaign.verbose
        self.name = loaded_campaign.name
        self.path = loaded_campaign.path
        self.config = loaded_campaign.config
        self._jobs = loaded_campaign._jobs
        return loaded_campaign

    def load_or_run(self, rerun=False, file_name=None, raise_error="warning", **run_kwargs):
        """
         Load the campaign if it has been saved before (at file_name or self.file_name) and rerun is
         False. Otherwise, run it and save it.
        :param raise_error: If "warning" (default), errors raised while reading the pickled campaign
                            are caught and the campaign is rerun with a warning. If False, no warning
                            is issued. If True, the error is not caught.
        :param run_kwargs: Arguments passed to self.run().
        """
        if rerun:
            self.run(**run_kwargs)
            self.save(file_name)
            return

        try:
            self.load(file_name)

        # No saved campaign yet.
        except IOError:
            self.run(**run_kwargs)
            self.save(file_name)

        except Exception as e:
            if raise_error is True:
                raise
            if raise_error == "warning":
                warn("A problem happened while trying to load the saved campaign object. " +
                     "Running it anew and saving the resulting object. Exception error message:\n" + str(e))
            self.run(**run_kwargs)
            self.save(file_name)
