#!/usr/bin/env python

"""The setup script."""

from setuptools import find_packages, setup

VERSION = "0.1.0"

with open("README.rst") as readme_file:
    readme = readme_file.read()

with open("CHANGELOG.rst") as changelog_file:
    changelog = changelog_file.read()

with open("requirements.txt") as f:
    requirements = f.read().splitlines()

test_requirements = [
    "pytest>=3",
]

setup(
    author="guardband developers",
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering",
    ],
    description="Blocking and dropping analysis of guard-band call admission control in cellular networks",
    entry_points={
        "console_scripts": [
            "guardband=guardband.__main__:run_guardband",
        ],
    },
    install_requires=requirements,
    license="MIT license",
    long_description=readme + "\n\n" + changelog,
    include_package_data=True,
    keywords="guardband",
    name="guardband",
    packages=find_packages(exclude=("docs", "tests")),
    package_data={"": ["presets/*.yaml"]},
    test_suite="tests",
    tests_require=test_requirements,
    version=VERSION,
    zip_safe=False,
)
