# Ref:
#     http://docs.python.org/distutils/setupscript.html#meta-data
#     http://pypi.python.org/pypi?%3Aaction=list_classifiers
from setuptools import setup, find_packages

from rydqudit import __version__

setup(
    name='django-rydberg-qudits',
    version=__version__,
    author='Chris Malek',
    author_email='cmalek@placodermi.org',
    packages=find_packages(exclude=['rydqudit.tests']),
    url='https://github.com/cmalek/django-rydberg-qudits',
    license='LICENSE.txt',
    description='Optimal-control pulses, CZ compilation and noisy benchmarks for Rydberg-atom qudits',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    python_requires='>=3.7',
    install_requires=[
        'django>=3.2,<4.0',
        'numpy>=1.19',
        'scipy>=1.5',
    ],
    entry_points={
        'console_scripts': [
            'rydqudit = rydqudit.__main__:main',
        ],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Framework :: Django',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Physics',
    ],
)
