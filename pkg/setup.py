# type: ignore
from setuptools import find_packages, setup, Command

import sys

# Get VERSION constant from guimigrate.version - we can't simply import that module because
# guimigrate/__init__.py imports modules that require dependencies we may not have loaded yet.
# Based on https://packaging.python.org/guides/single-sourcing-package-version/
version_module_globals = {}
with open('./guimigrate/version.py') as f:
    exec(f.read(), version_module_globals)
guimigrate_version = version_module_globals['VERSION']

def parse_requirements(filename):
    """ load requirements from a pip requirements file """
    lineiter = (line.strip() for line in open(filename))
    return [line for line in lineiter if line and not line.startswith("#")]

install_reqs = parse_requirements('requirements.txt')
test_reqs = parse_requirements('test-requirements.txt')
yaml_reqs = parse_requirements('yaml-requirements.txt')


class PyTest(Command):
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        import subprocess
        errno = subprocess.call([sys.executable, '-m', 'pytest', 'testing'])
        raise SystemExit(errno)

setup(
    name='gui-test-migrator',
    version=guimigrate_version,
    packages=find_packages(exclude=['testing', 'testing.*']),
    description='Migrates GUI tests between apps that share a functionality, guided by a vision-language model',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    python_requires='>=3.8',
    install_requires=install_reqs,
    classifiers=[
        'Intended Audience :: Developers',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Software Development :: Testing',
    ],
    extras_require={
        "yaml": yaml_reqs
    },
    entry_points={
        'console_scripts': ['gui-migrate=guimigrate.cli:main'],
    },
    tests_require=test_reqs,
    cmdclass={'test': PyTest},
)
