"""
Template of setup.py.

See https://github.com/NHSDigital/rap-community-of-practice/blob/main/python/project-structure-and-packaging.md
"""

from setuptools import find_packages, setup

setup(
    name='dictguide',
    packages=find_packages(include=['dictguide', 'dictguide.*']),
    package_data={'dictguide': ['data/confusion_table.txt']},
    version='0.1.0',
    description='Dictionary-guided text recognition with image-text matching',
    author='dictguide maintainers',
    license='MIT',
    install_requires=['numpy', 'pandas', 'rapidfuzz'],
    entry_points={'console_scripts': ['dictguide = dictguide.cli:main']},
    setup_requires=['pytest-runner', 'flake8'],
    tests_require=['pytest', 'hypothesis'],
)
