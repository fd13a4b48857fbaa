#!/usr/bin/python
# -*- coding: utf-8 -*-


def run(verbose=False, slow=False):
    '''run the unit tests of kscontrol (using `pytest`)

    return True if test run succeeded, False otherwise
    '''
    import pytest
    print('kscontrol unit tests:')
    argv = [__path__[0]]
    if verbose:
        argv.append('--verbose')
    argv += ['-m', ''] if slow else ['-m', 'not slow']
    return pytest.main(argv) == 0
