from setuptools import setup, find_packages

setup(
    name='rkhsdagma',
    version='0.1.0',
    license='bsd-3-clause',
    description='Nonparametric causal DAG discovery with RKHS structural functions and the '
                'log-determinant acyclicity constraint.',
    packages=find_packages(),
    data_files=[("configs", ["configs/app_default_config.yaml"]),
                ("schemas", ["schemas/app_default_schema.yaml"]),
                ("templates", ["templates/slurm_template.jinja"])],
    install_requires=["numpy", "scipy", "pandas>=1.5", "networkx", "pyyaml", "pykwalify", "jinja2", "pytest"],
    entry_points={"console_scripts": ["rkhsdagma = rkhsdagma.cli:main"]},
    python_requires=">=3.8",
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'License :: OSI Approved',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10'
    ],
)
