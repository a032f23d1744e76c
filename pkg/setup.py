from setuptools import setup, find_packages

setup(
    name="sangam-backend",
    version="0.1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pydantic>=2",
        "PyYAML",
        "python-dotenv",
    ],
    extras_require={
        "test": ["pytest", "pytest-mock"],
    },
    entry_points={
        "console_scripts": [
            "sangam=backend.src.main:main",
        ],
    },
)
