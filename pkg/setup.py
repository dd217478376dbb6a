from setuptools import setup, find_packages

setup(
    name="elastica_lab",
    version="0.1",
    packages=find_packages(exclude=("tests", "examples", "examples.*")),
    include_package_data=True,
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pydantic>=2",
        "POT",
        "scikit-image",
    ],
    extras_require={"test": ["pytest"]},
)
