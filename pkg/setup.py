"""
# django-clarke

Efficient auctions for common-value goods as a reusable Django app.

## Docs & Example Usage: see README.md and docs/
"""
import os

from setuptools import find_packages, setup

here = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(here, "README.md"), encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="django-clarke",
    version="0.1.0",
    license="MIT",
    description="""
    VCG, signal and bid-function auctions with a truthfulness verification harness.
    """,
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
        "Framework :: Django",
        "Framework :: Django :: 3.2",
        "Framework :: Django :: 4.2",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="django auction vcg mechanism-design common-values",
    packages=find_packages(exclude=[".github", "docs", "tests", "example_project"]),
    python_requires=">=3.8",
    install_requires=["django>=3.2", "djangorestframework>=3.10", "humanize", "numpy>=1.20"],
    entry_points={"console_scripts": ["clarke=clarke.__main__:main"]},
    # $ pip install -e .[dev,test]
    extras_require={
        "dev": ["black", "flake8", "isort", "coverage", "hypothesis", "pytest-django"],
        "test": ["coverage", "hypothesis", "pytest-django"],
    },
)
