# -*- coding: utf-8 -*-

from setuptools import find_packages, setup


with open("README.md") as f:
    readme = f.read()


setup(
    name="mdidro",
    version="0.1.0",
    python_requires=">=3.8.0",
    # Make sure to pin versions of install_requires
    install_requires=[
        "click>=7.0,<8.0",
        "humanize>=0.5",
        "atomicwrites>=1.2",
        "toml>=0.10.0",
        "numpy>=1.18",
        "scipy>=1.6",
        "pandas>=1.0",
    ],
    include_package_data=True,
    description="Distributionally robust prediction from moment information",
    long_description=readme,
    long_description_content_type="text/markdown; charset=UTF-8; variant=GFM",
    license="Apache License, version 2.0",
    packages=find_packages(include=("mdidro", "mdidro.*")),
    entry_points={"console_scripts": ["mdi=mdidro.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: Apache Software License",
    ],
)
