from django.apps import AppConfig
from django.core import checks

import logging

logger = logging.getLogger('rydqudit')


class RydquditConfig(AppConfig):
    name = 'rydqudit'
    verbose_name = 'Rydberg qudits'
    initialized = False

    def ready(self):
        if self.initialized:
            logger.warning(f"app.config.ready.error msg='{self.__class__.__name__}.ready() executed more than once!'")
            return
        from .conf import check_settings
        checks.register(check_settings)
        self.initialized = True
        logger.debug(f'app.config.ready app={self.name}')
