from setuptools import setup, find_packages
import os
import re

# Read version from _version.py
with open(os.path.join('dirichletlab', '_version.py'), 'r') as f:
    version_file = f.read()
    version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", version_file, re.M)
    if version_match:
        version = version_match.group(1)
    else:
        raise RuntimeError("Unable to find version string in _version.py")

setup(
    name="dirichletlab",
    version=version,
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    description="Finite-dimensional laboratory for 2-homogeneous nonlinear Dirichlet forms",
    author="The dirichletlab developers",
    author_email="dirichletlab-developers@users.noreply.github.com",
    install_requires=[
        "numpy",
        "scipy",
        "pydantic>=2",
        "python-dotenv",
    ],
    entry_points={
        "console_scripts": [
            "dirichletlab=dirichletlab.cli:main",
        ],
    },
    python_requires=">=3.9",
)
