#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    author="Tenzir",
    author_email="engineering@tenzir.com",
    classifiers=[
        # https://pypi.org/classifiers/
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: POSIX :: Linux",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Communications",
    ],
    description="Statistics of the extended generalized-K composite fading channel.",
    entry_points={"console_scripts": ["egk=egk.cli:main"]},
    extras_require={"dev": ["black>=19.10b", "mpmath>=1.1"]},
    include_package_data=True,
    install_requires=[
        "coloredlogs>=10.0",
        "dynaconf>=3.1.4",
        "numpy>=1.17",
        "pluggy>=0.13",
        "scipy>=1.4",
    ],
    keywords=[
        "egk",
        "fading",
        "composite fading",
        "shadowing",
        "wireless channel",
        "level crossing rate",
    ],
    license="BSD 3-clause",
    long_description=long_description,
    long_description_content_type="text/markdown",
    name="egk-fading",
    package_data={"egk": ["presets.yaml"]},
    packages=["egk"],
    python_requires=">=3.7",
    setup_requires=["setuptools", "wheel"],
    version="2026.10.17",
)
